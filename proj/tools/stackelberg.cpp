#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stackelberg/benchmarks.hpp"
#include "stackelberg/csv_io.hpp"
#include "stackelberg/equilibrium.hpp"
#include "stackelberg/errors.hpp"
#include "stackelberg/lq_model.hpp"
#include "stackelberg/riccati.hpp"
#include "stackelberg/sde_sim.hpp"
#include "stackelberg/verify.hpp"

namespace {

using namespace stackelberg;

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("STACKELBERG_LOG");
  if (!env) return LogLevel::Info;
  std::string v(env);
  if (v == "error") return LogLevel::Error;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

void info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cout << msg << "\n";
}

void debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cout << "[debug] " << msg << "\n";
}

struct Options {
  std::string spec_path;
  std::string case_name = "case1";
  int steps = 10000;
  std::string method = "rk4";
  long long paths = 10000;
  long long sim_steps = 1000;
  std::uint64_t seed = 42;
  std::string x0_csv;
  std::string out_dir = "out";
};

CaseTag parse_case(const std::string& name) {
  if (name == "case1") return CaseTag::Case1General;
  if (name == "case1-reduced") return CaseTag::Case1Reduced;
  if (name == "case2") return CaseTag::Case2;
  throw HorizonError("unknown case name: " + name);
}

IntegrationMethod parse_method(const std::string& name) {
  if (name == "rk4") return IntegrationMethod::Rk4;
  if (name == "euler") return IntegrationMethod::Euler;
  throw HorizonError("unknown integration method: " + name);
}

Eigen::VectorXd parse_x0(const std::string& csv, int n) {
  if (csv.empty()) return Eigen::VectorXd::Ones(n);
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      vals.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw DimensionMismatch("--x0: cannot parse '" + tok + "' as a number");
    }
  }
  if (static_cast<int>(vals.size()) != n)
    throw DimensionMismatch("--x0 has " + std::to_string(vals.size()) +
                            " entries, state dimension is " +
                            std::to_string(n));
  return Eigen::Map<Eigen::VectorXd>(vals.data(),
                                     static_cast<Eigen::Index>(vals.size()));
}

void print_header(const std::string& command, const Options& opt) {
  std::ostringstream h;
  h << "stackelberg " << command << " | case=" << opt.case_name
    << " steps=" << opt.steps << " method=" << opt.method
    << " paths=" << opt.paths << " sim-steps=" << opt.sim_steps
    << " seed=" << opt.seed
    << " | defaults: steps=10000 method=rk4 paths=10000 sim-steps=1000 "
       "seed=42";
  info(h.str());
}

GameSpec load_or_builtin(const Options& opt) {
  if (!opt.spec_path.empty()) {
    debug("loading spec from " + opt.spec_path);
    return load_game_spec(opt.spec_path);
  }
  debug("no spec given; using built-in coupled benchmark");
  return make_coupled_benchmark_game();
}

void require_case(const GameSpec& game, CaseTag tag) {
  std::vector<std::string> bad = case_preconditions(game, tag);
  if (!bad.empty()) {
    std::string msg = "spec violates " + std::string(to_string(tag)) +
                      " restrictions; nonzero coefficients:";
    for (const auto& c : bad) msg += " " + c;
    throw ConditionViolation(msg);
  }
}

RiccatiTrajectory solve_pipeline(const GameSpec& game, const Options& opt,
                                 CaseTag tag) {
  require_case(game, tag);
  RiccatiTrajectory traj =
      solve_backward(game, tag, opt.steps, parse_method(opt.method));
  SolvabilityReport rep = check_solvability(traj, game, tag);
  if (!rep.margins_ok)
    throw ConditionViolation("solvability margins fell below tolerance: " +
                             rep.note);
  info("solvability: margins ok; " + rep.note);
  return traj;
}

int cmd_solve(const Options& opt) {
  print_header("solve", opt);
  GameSpec game = load_or_builtin(opt);
  CaseTag tag = parse_case(opt.case_name);
  RiccatiTrajectory traj = solve_pipeline(game, opt, tag);
  auto [leader, follower] = build_strategies(traj, game, tag);
  write_trajectory_csv(traj, opt.out_dir + "/trajectory.csv");
  write_gains_csv(leader, follower, opt.out_dir + "/gains.csv");
  info("wrote " + opt.out_dir + "/trajectory.csv (" +
       std::to_string(traj.grid.size()) + " rows) and " + opt.out_dir +
       "/gains.csv");
  return 0;
}

int cmd_simulate(const Options& opt) {
  print_header("simulate", opt);
  GameSpec game = load_or_builtin(opt);
  CaseTag tag = parse_case(opt.case_name);
  RiccatiTrajectory traj = solve_pipeline(game, opt, tag);
  auto [leader, follower] = build_strategies(traj, game, tag);
  SimConfig cfg;
  cfg.n_paths = opt.paths;
  cfg.n_steps = opt.sim_steps;
  cfg.seed = opt.seed;
  cfg.initial_state = parse_x0(opt.x0_csv, game.dims.n);
  ValueGapReport gap = estimate_value_gap(game, traj, leader, follower, cfg);
  SimulationResult sim = simulate(game, leader, follower, cfg);
  std::ostringstream out;
  out << "J1_mean,J1_stderr,J2_mean,J2_stderr,V1,V2,gap1,gap2\n"
      << fmt17(sim.J1_mean) << "," << fmt17(sim.J1_stderr) << ","
      << fmt17(sim.J2_mean) << "," << fmt17(sim.J2_stderr) << ","
      << fmt17(gap.value1) << "," << fmt17(gap.value2) << ","
      << fmt17(gap.gap1) << "," << fmt17(gap.gap2) << "\n";
  atomic_write(opt.out_dir + "/simulation.csv", out.str());
  info("J1 = " + std::to_string(sim.J1_mean) + " +/- " +
       std::to_string(sim.J1_stderr) + ", value " + std::to_string(gap.value1) +
       " (gap " + std::to_string(gap.gap1) + ")");
  info("J2 = " + std::to_string(sim.J2_mean) + " +/- " +
       std::to_string(sim.J2_stderr) + ", value " + std::to_string(gap.value2) +
       " (gap " + std::to_string(gap.gap2) + ")");
  info("wrote " + opt.out_dir + "/simulation.csv");
  return 0;
}

int cmd_verify(const Options& opt) {
  print_header("verify", opt);
  GameSpec game = load_or_builtin(opt);
  CaseTag tag = parse_case(opt.case_name);
  RiccatiTrajectory traj = solve_pipeline(game, opt, tag);
  auto [leader, follower] = build_strategies(traj, game, tag);
  SimConfig cfg;
  cfg.n_paths = opt.paths;
  cfg.n_steps = opt.sim_steps;
  cfg.seed = opt.seed;
  cfg.initial_state = parse_x0(opt.x0_csv, game.dims.n);
  using T = PerturbationFamily::Target;
  using K = PerturbationFamily::Kind;
  std::vector<VerificationReport> reports;
  bool all_pass = true;
  for (T target : {T::Leader, T::Follower}) {
    for (K kind : {K::GainOffset, K::ConstantOffset}) {
      int m = target == T::Leader ? game.dims.m1 : game.dims.m2;
      PerturbationFamily fam = default_family(target, kind, m, game.dims.n);
      VerificationReport rep =
          stackelberg_inequality_test(game, leader, follower, fam, cfg);
      std::cout << verification_summary(rep);
      all_pass = all_pass && rep.all_pass;
      reports.push_back(std::move(rep));
    }
  }
  write_verification_csv(reports, opt.out_dir + "/verification.csv");
  info("wrote " + opt.out_dir + "/verification.csv");
  if (!all_pass)
    throw ConditionViolation("a sampled deviation decreased the target cost");
  return 0;
}

int cmd_residual(const Options& opt) {
  print_header("residual", opt);
  GameSpec game = load_or_builtin(opt);
  CaseTag tag = parse_case(opt.case_name);
  RiccatiTrajectory traj = solve_pipeline(game, opt, tag);
  const int n = game.dims.n;
  std::ostringstream out;
  out << "s,";
  for (int i = 0; i < n; ++i) out << "x_" << (i + 1) << ",";
  out << "r1,r2\n";
  double t0 = game.horizon.t0, T = game.horizon.T;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    // Deterministic low-discrepancy sweep over [t0,T] × {|x| <= 10}.
    double frac = (k + 0.5) / 100.0;
    double s = t0 + frac * (T - t0);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i)
      x(i) = 10.0 * std::cos(2.0 * 3.14159265358979323846 *
                             (0.618033988749895 * (k + 1) + 0.1 * i));
    auto [r1, r2] = pde_residual(traj, game, tag, s, x);
    worst = std::max(worst, std::max(std::abs(r1), std::abs(r2)));
    out << fmt17(s) << ",";
    for (int i = 0; i < n; ++i) out << fmt17(x(i)) << ",";
    out << fmt17(r1) << "," << fmt17(r2) << "\n";
  }
  atomic_write(opt.out_dir + "/residuals.csv", out.str());
  info("max |residual| over 100 probe points: " + std::to_string(worst));
  info("wrote " + opt.out_dir + "/residuals.csv");
  return 0;
}

int cmd_example(const Options& opt) {
  print_header("example", opt);
  GameSpec game = make_coupled_benchmark_game();
  CaseTag tag = CaseTag::Case1General;
  RiccatiTrajectory traj = solve_pipeline(game, opt, tag);
  auto [leader, follower] = build_strategies(traj, game, tag);
  atomic_write(opt.out_dir + "/spec.json", game_spec_to_json(game) + "\n");
  write_trajectory_csv(traj, opt.out_dir + "/trajectory.csv");
  write_gains_csv(leader, follower, opt.out_dir + "/gains.csv");
  // Plot data in the reversed-time orientation r = T - s.
  std::ostringstream fig;
  fig << "r,P1,P2\n";
  double T = game.horizon.T;
  for (std::size_t k = traj.grid.size(); k-- > 0;) {
    fig << fmt17(T - traj.grid[k]) << "," << fmt17(traj.P1[k](0, 0)) << ","
        << fmt17(traj.P2[k](0, 0)) << "\n";
  }
  atomic_write(opt.out_dir + "/figure1.csv", fig.str());
  info("wrote " + opt.out_dir +
       "/{spec.json,trajectory.csv,gains.csv,figure1.csv}");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Feedback Stackelberg equilibrium solver for linear-quadratic "
      "stochastic differential games"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--spec", opt.spec_path, "Game spec JSON path");
    sub->add_option("--case", opt.case_name, "case1|case1-reduced|case2")
        ->check(CLI::IsMember({"case1", "case1-reduced", "case2"}));
    sub->add_option("--steps", opt.steps, "Riccati grid steps K (default 10000)");
    sub->add_option("--method", opt.method, "rk4|euler")
        ->check(CLI::IsMember({"rk4", "euler"}));
    sub->add_option("--paths", opt.paths, "Monte-Carlo paths (default 10000)");
    sub->add_option("--sim-steps", opt.sim_steps,
                    "Euler-Maruyama steps (default 1000)");
    sub->add_option("--seed", opt.seed, "RNG seed (default 42)");
    sub->add_option("--x0", opt.x0_csv, "Initial state, comma separated");
    sub->add_option("--out", opt.out_dir, "Output directory (default out)");
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve the coupled Riccati system");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo cost estimate");
  CLI::App* verify = app.add_subcommand("verify", "Test the equilibrium inequalities");
  CLI::App* residual = app.add_subcommand("residual", "Evaluate PDE residuals");
  CLI::App* example = app.add_subcommand("example", "Write the built-in benchmark artifacts");
  for (CLI::App* sub : {solve, simulate, verify, residual, example})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (opt.steps < 10) throw HorizonError("--steps must be at least 10");
    if (solve->parsed()) return cmd_solve(opt);
    if (simulate->parsed()) return cmd_simulate(opt);
    if (verify->parsed()) return cmd_verify(opt);
    if (residual->parsed()) return cmd_residual(opt);
    if (example->parsed()) return cmd_example(opt);
  } catch (const stackelberg::Error& e) {
    std::cerr << "error[" << e.exit_code() << "]: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
