#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const char* kCli = STACKELBERG_CLI_PATH;

int run(const std::string& args) {
  std::string cmd = std::string(kCli) + " " + args + " > cli_stdout.txt 2>&1";
  int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

}  // namespace

TEST_CASE("example writes the full artifact set") {
  CHECK(run("example --out cli_ex") == 0);
  std::string traj = slurp("cli_ex/trajectory.csv");
  CHECK(count_lines(traj) == 10002);  // header + K+1 nodes at default K
  CHECK(traj.rfind("s,P1_11,P2_11,", 0) == 0);
  CHECK(!slurp("cli_ex/gains.csv").empty());
  CHECK(!slurp("cli_ex/spec.json").empty());
  std::string fig = slurp("cli_ex/figure1.csv");
  CHECK(fig.rfind("r,P1,P2", 0) == 0);
  CHECK(count_lines(fig) == 10002);
}

TEST_CASE("a spec written by example re-solves to identical bytes") {
  REQUIRE(run("example --out cli_rt") == 0);
  REQUIRE(run("solve --spec cli_rt/spec.json --out cli_rt2") == 0);
  CHECK(slurp("cli_rt/trajectory.csv") == slurp("cli_rt2/trajectory.csv"));
  CHECK(slurp("cli_rt/gains.csv") == slurp("cli_rt2/gains.csv"));
}

TEST_CASE("reruns are byte-identical") {
  REQUIRE(run("solve --steps 500 --out cli_d1") == 0);
  REQUIRE(run("solve --steps 500 --out cli_d2") == 0);
  CHECK(slurp("cli_d1/trajectory.csv") == slurp("cli_d2/trajectory.csv"));
  REQUIRE(run("simulate --steps 200 --paths 300 --sim-steps 100 --x0 1 "
              "--out cli_s1") == 0);
  REQUIRE(run("simulate --steps 200 --paths 300 --sim-steps 100 --x0 1 "
              "--out cli_s2") == 0);
  CHECK(slurp("cli_s1/simulation.csv") == slurp("cli_s2/simulation.csv"));
}

TEST_CASE("the solver pipeline reports condition violations as exit 3") {
  // Degenerate follower control weight.
  std::ofstream out("cli_bad_spec.json");
  out << R"({"dims": {"n":1,"m1":1,"m2":1}, "horizon": {"t0":0.0,"T":1.0},
             "dynamics": {"A": 1.0, "B1": 1.0, "B2": 0.001, "C": 1.0},
             "cost1": {"Q":1.0,"R11":1.0,"R12":1.0,"L":[[1.0]]},
             "cost2": {"Q":1.0,"R12":0.001,"L":[[2.0]]}})";
  out.close();
  CHECK(run("solve --spec cli_bad_spec.json --out cli_bad") == 3);
}

TEST_CASE("spec violating the case restrictions is exit 3 with a diagnostic") {
  std::ofstream out("cli_case_spec.json");
  out << R"({"dims": {"n":1,"m1":1,"m2":1}, "horizon": {"t0":0.0,"T":1.0},
             "dynamics": {"A": 1.0, "B1": 1.0, "b": 0.5},
             "cost1": {"Q":1.0,"R11":1.0},
             "cost2": {"R22":1.0}})";
  out.close();
  CHECK(run("solve --spec cli_case_spec.json --case case2 --out cli_case") ==
        3);
  std::string log = slurp("cli_stdout.txt");
  CHECK(log.find("b != 0") != std::string::npos);
}

TEST_CASE("missing files and bad flags map to the declared exit codes") {
  CHECK(run("solve --spec does_not_exist.json --out cli_io") == 5);
  CHECK(run("solve --method warp9 --out cli_flag") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("solve --steps 3 --out cli_coarse") == 2);
  CHECK(run("simulate --x0 1,2,3 --steps 200 --out cli_x0") == 2);
}

TEST_CASE("residual and verify smoke runs succeed") {
  CHECK(run("residual --steps 2000 --out cli_res") == 0);
  std::string res = slurp("cli_res/residuals.csv");
  CHECK(res.rfind("s,x_1,r1,r2", 0) == 0);
  CHECK(count_lines(res) == 101);
  CHECK(run("verify --steps 300 --paths 200 --sim-steps 100 --x0 1 "
            "--out cli_ver") == 0);
  std::string ver = slurp("cli_ver/verification.csv");
  CHECK(ver.rfind("target,kind,eps,deltaJ,stderr,pass", 0) == 0);
}

TEST_CASE("quiet log level suppresses the run header") {
  std::string cmd = std::string("STACKELBERG_LOG=error ") + kCli +
                    " solve --steps 200 --out cli_quiet > cli_quiet.txt 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(slurp("cli_quiet.txt").empty());
}
