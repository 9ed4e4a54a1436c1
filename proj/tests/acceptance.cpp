#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stackelberg/benchmarks.hpp"
#include "stackelberg/equilibrium.hpp"
#include "stackelberg/hamiltonian.hpp"
#include "stackelberg/riccati.hpp"
#include "stackelberg/sde_sim.hpp"
#include "stackelberg/verify.hpp"

using namespace stackelberg;

namespace {

// Accumulates named failures so each criterion can report one pass/fail line
// while keeping the individual diagnostics.
struct Check {
  std::vector<std::string> failures;
  void expect(bool cond, const std::string& what) {
    if (!cond) failures.push_back(what);
  }
};

class Criterion {
 public:
  Criterion(int id, const char* name, double budget_seconds)
      : id_(id), name_(name), budget_(budget_seconds),
        start_(std::chrono::steady_clock::now()) {}

  Check& check() { return check_; }

  void finish() {
    double elapsed = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start_)
                         .count();
    check_.expect(elapsed < budget_,
                  "runtime " + std::to_string(elapsed) + "s exceeds budget " +
                      std::to_string(budget_) + "s");
    std::printf("criterion %d: %s — %s (%.2fs, budget %.0fs)\n", id_,
                check_.failures.empty() ? "PASS" : "FAIL", name_, elapsed,
                budget_);
    std::fflush(stdout);
    for (const auto& f : check_.failures) {
      std::string msg = "criterion " + std::to_string(id_) + ": " + f;
      CHECK_MESSAGE(false, msg);
    }
    CHECK(check_.failures.empty());
  }

 private:
  int id_;
  const char* name_;
  double budget_;
  std::chrono::steady_clock::time_point start_;
  Check check_;
};

Eigen::MatrixXd s1(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}

Eigen::VectorXd v1(double v) {
  Eigen::VectorXd x(1);
  x(0) = v;
  return x;
}

// Independent transcription of the scalar coupled benchmark right-hand side
// (A=1, B1=1, B2=0.001, C=1, unit costs, couplings 1 and 0.001).
void scalar_coupled_rhs(double P1, double P2, double& dP1, double& dP2) {
  double gamma = 0.999999 * P1 - 0.001 * P2;
  dP1 = gamma * gamma / 0.998 + 2e-6 * P1 * P2 - 3.0 * P1 - 1.0;
  dP2 = 1e-6 * gamma * gamma / (0.998 * 0.998) +
        2.0 * 0.999999 / 0.998 * P2 * gamma + 1e-6 * P2 * P2 - 3.0 * P2 - 1.0;
}

// Fully independent scalar transcription of both Hamiltonians:
// H_i = p_i (a x + b1 u + b2 v + b) + (1/2) A_i (c x + d1 u + d2 v + l)^2
//     + (1/2)(Q_i x^2 + R11_i u^2 + 2 R12_i u v + R22_i v^2)
//     + M1_i x u + M2_i x v + q_i x + r1_i u + r2_i v.
struct ScalarInstance {
  double x;
  double p1, p2, Ap, App;
  double a, b1, b2, b, c, d1, d2, l;
  double Q1, R111, R112, R122, M11, M12, q1, r11, r12;
  double Q2, R211, R212, R222, M21, M22, q2, r21, r22;

  double H(int player, double u, double v) const {
    double p = player == 1 ? p1 : p2;
    double A = player == 1 ? Ap : App;
    double sig = c * x + d1 * u + d2 * v + l;
    double g;
    if (player == 1)
      g = 0.5 * (Q1 * x * x + R111 * u * u + 2.0 * R112 * u * v +
                 R122 * v * v) +
          M11 * x * u + M12 * x * v + q1 * x + r11 * u + r12 * v;
    else
      g = 0.5 * (Q2 * x * x + R211 * u * u + 2.0 * R212 * u * v +
                 R222 * v * v) +
          M21 * x * u + M22 * x * v + q2 * x + r21 * u + r22 * v;
    return p * (a * x + b1 * u + b2 * v + b) + 0.5 * A * sig * sig + g;
  }

  // The follower reacts to u; composing it into H1 gives the leader objective.
  double follower_reaction(double u) const {
    double rhat2 = d2 * d2 * App + R222;
    double psi_x = (d2 * App * c + M22) / rhat2;
    double phi = (d2 * App * d1 + R212) / rhat2;
    double psi0 = (b2 * p2 + d2 * App * l + r22) / rhat2;
    return -psi_x * x - phi * u - psi0;
  }

  double leader_objective(double u) const { return H(1, u, follower_reaction(u)); }

  CoefficientSnapshot snapshot() const {
    CoefficientSnapshot s;
    s.s = 0.0;
    s.dims = {1, 1, 1};
    s.A = s1(a); s.B1 = s1(b1); s.B2 = s1(b2);
    s.C = s1(c); s.D1 = s1(d1); s.D2 = s1(d2);
    s.b = v1(b); s.lambda = v1(l);
    s.cost1.Q = s1(Q1); s.cost1.M1 = s1(M11); s.cost1.M2 = s1(M12);
    s.cost1.R11 = s1(R111); s.cost1.R12 = s1(R112);
    s.cost1.R21 = s1(R112); s.cost1.R22 = s1(R122);
    s.cost1.q = v1(q1); s.cost1.rho1 = v1(r11); s.cost1.rho2 = v1(r12);
    s.cost1.L = s1(0.0); s.cost1.N = v1(0.0);
    s.cost2.Q = s1(Q2); s.cost2.M1 = s1(M21); s.cost2.M2 = s1(M22);
    s.cost2.R11 = s1(R211); s.cost2.R12 = s1(R212);
    s.cost2.R21 = s1(R212); s.cost2.R22 = s1(R222);
    s.cost2.q = v1(q2); s.cost2.rho1 = v1(r21); s.cost2.rho2 = v1(r22);
    s.cost2.L = s1(0.0); s.cost2.N = v1(0.0);
    return s;
  }

  CostateInputs costates() const {
    CostateInputs cs;
    cs.p1 = v1(p1); cs.p2 = v1(p2);
    cs.Ap = s1(Ap); cs.App = s1(App);
    return cs;
  }
};

// Rejection-samples instances whose convexity margins are at least 0.1 and
// whose minimizers stay well inside the brute-force grid span.
ScalarInstance random_instance(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> up(0.3, 2.0);
  for (;;) {
    ScalarInstance in;
    in.x = 3.0 * u(gen);
    in.p1 = 2.0 * u(gen); in.p2 = 2.0 * u(gen);
    in.Ap = up(gen); in.App = up(gen);
    in.a = u(gen); in.b1 = u(gen); in.b2 = u(gen); in.b = u(gen);
    in.c = u(gen); in.d1 = u(gen); in.d2 = u(gen); in.l = u(gen);
    in.Q1 = up(gen); in.R111 = up(gen); in.R112 = 0.5 * u(gen);
    in.R122 = up(gen); in.M11 = 0.5 * u(gen); in.M12 = 0.5 * u(gen);
    in.q1 = u(gen); in.r11 = u(gen); in.r12 = u(gen);
    in.Q2 = up(gen); in.R211 = up(gen); in.R212 = 0.5 * u(gen);
    in.R222 = up(gen); in.M21 = 0.5 * u(gen); in.M22 = 0.5 * u(gen);
    in.q2 = u(gen); in.r21 = u(gen); in.r22 = u(gen);

    ConvexityReport conv;
    try {
      conv = check_convexity(in.snapshot(), in.costates());
    } catch (const Error&) {
      continue;
    }
    if (conv.min_eig_follower < 0.1 || conv.min_eig_leader < 0.1) continue;

    Eigen::VectorXd mu;
    try {
      mu = leader_best_response(in.snapshot(), v1(in.x), in.costates());
    } catch (const Error&) {
      continue;
    }
    Eigen::VectorXd nu = follower_best_response(in.snapshot(), v1(in.x), mu,
                                                in.costates());
    if (std::abs(mu(0)) > 8.0 || std::abs(nu(0)) > 8.0) continue;
    return in;
  }
}

double grid_argmin(const std::function<double(double)>& f) {
  double best_x = -10.0, best_v = f(-10.0);
  for (long long k = 1; k <= 200000; ++k) {
    double x = -10.0 + 1e-4 * static_cast<double>(k);
    double v = f(x);
    if (v < best_v) { best_v = v; best_x = x; }
  }
  return best_x;
}

double max_tanh_error(const RiccatiTrajectory& traj) {
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.grid.size(); ++k)
    worst = std::max(worst,
                     std::abs(traj.P1[k](0, 0) - std::tanh(1.0 - traj.grid[k])));
  return worst;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  std::string cmd =
      std::string(STACKELBERG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("criterion 1: coupled benchmark, cross-integrator agreement") {
  Criterion cr(1, "coupled benchmark: independent RHS arithmetic, rk4 vs "
                  "euler trajectories, condition margins", 5.0);
  Check& c = cr.check();

  GameSpec g = make_coupled_benchmark_game();
  CoefficientSnapshot snap = snapshot(g, g.horizon.T);
  RiccatiRhs rhs = riccati_rhs(snap, CaseTag::Case1General,
                               g.cost1.L, g.cost2.L);
  double d1 = 0.0, d2 = 0.0;
  scalar_coupled_rhs(g.cost1.L(0, 0), g.cost2.L(0, 0), d1, d2);
  c.expect(std::abs(rhs.dP1(0, 0) - d1) <= 1e-9,
           "terminal dP1 deviates from independent arithmetic");
  c.expect(std::abs(rhs.dP2(0, 0) - d2) <= 1e-9,
           "terminal dP2 deviates from independent arithmetic");

  RiccatiTrajectory rk4 =
      solve_backward(g, CaseTag::Case1General, 10000, IntegrationMethod::Rk4);
  RiccatiTrajectory eul = solve_backward(g, CaseTag::Case1General, 1000000,
                                         IntegrationMethod::Euler);
  double worst = 0.0;
  for (std::size_t k = 0; k < rk4.grid.size(); ++k) {
    std::size_t j = 100 * k;  // shared grid nodes
    worst = std::max(worst, std::abs(rk4.P1[k](0, 0) - eul.P1[j](0, 0)));
    worst = std::max(worst, std::abs(rk4.P2[k](0, 0) - eul.P2[j](0, 0)));
  }
  c.expect(worst <= 1e-4, "rk4 K=1e4 and euler K=1e6 disagree pointwise by " +
                              std::to_string(worst));

  bool margins_ok = true;
  for (std::size_t k = 0; k < rk4.grid.size(); ++k)
    margins_ok = margins_ok &&
                 std::abs(rk4.margin_follower[k] - 1.0) <= 1e-9 &&
                 std::abs(rk4.margin_leader[k] - 0.998) <= 1e-9 &&
                 rk4.solvable[k];
  c.expect(margins_ok, "condition margins 1 / 0.998 not held at all nodes");
  cr.finish();
}

TEST_CASE("criterion 2: closed-form tanh kernel and gains") {
  Criterion cr(2, "leader-only benchmark: P1 = tanh(T-s), K_u = -tanh(T-s), "
                  "silent follower", 1.0);
  Check& c = cr.check();

  GameSpec g = make_tanh_benchmark_game();
  RiccatiTrajectory traj =
      solve_backward(g, CaseTag::Case2, 10000, IntegrationMethod::Rk4);
  c.expect(max_tanh_error(traj) <= 1e-8, "P1 deviates from tanh(T-s)");

  auto [leader, follower] = build_strategies(traj, g, CaseTag::Case2);
  double worst_gain = 0.0, worst_follower = 0.0;
  for (std::size_t k = 0; k < leader.grid.size(); ++k) {
    worst_gain = std::max(worst_gain,
                          std::abs(leader.Kx[k](0, 0) +
                                   std::tanh(1.0 - leader.grid[k])));
    worst_follower = std::max(
        {worst_follower, follower.Kx[k].cwiseAbs().maxCoeff(),
         follower.Ku[k].cwiseAbs().maxCoeff(),
         follower.offset[k].cwiseAbs().maxCoeff()});
  }
  c.expect(worst_gain <= 1e-8, "leader gain deviates from -tanh(T-s)");
  c.expect(worst_follower == 0.0, "follower strategy is not identically zero");
  cr.finish();
}

TEST_CASE("criterion 3: pointwise minimizers vs brute force") {
  Criterion cr(3, "100 random scalar instances: closed-form best responses "
                  "match grid argmins, stationary gradients vanish", 30.0);
  Check& c = cr.check();

  std::mt19937_64 gen(20260826);
  for (int trial = 0; trial < 100; ++trial) {
    ScalarInstance in = random_instance(gen);
    CoefficientSnapshot snap = in.snapshot();
    CostateInputs cs = in.costates();

    Eigen::VectorXd mu = leader_best_response(snap, v1(in.x), cs);
    Eigen::VectorXd nu = follower_best_response(snap, v1(in.x), mu, cs);

    double nu_grid = grid_argmin(
        [&](double v) { return in.H(2, mu(0), v); });
    double mu_grid = grid_argmin(
        [&](double u) { return in.leader_objective(u); });
    c.expect(std::abs(nu(0) - nu_grid) <= 1.01e-4,
             "follower argmin off grid minimizer, trial " +
                 std::to_string(trial));
    c.expect(std::abs(mu(0) - mu_grid) <= 1.01e-4,
             "leader argmin off grid minimizer, trial " + std::to_string(trial));

    const double h = 1e-5;
    double gnu = (in.H(2, mu(0), nu(0) + h) - in.H(2, mu(0), nu(0) - h)) /
                 (2.0 * h);
    double gmu = (in.leader_objective(mu(0) + h) -
                  in.leader_objective(mu(0) - h)) /
                 (2.0 * h);
    double scale2 = 1.0 + std::abs(in.H(2, mu(0), nu(0)));
    double scale1 = 1.0 + std::abs(in.leader_objective(mu(0)));
    c.expect(std::abs(gnu) <= 1e-6 * scale2,
             "follower stationary gradient too large, trial " +
                 std::to_string(trial));
    c.expect(std::abs(gmu) <= 1e-6 * scale1,
             "leader stationary gradient too large, trial " +
                 std::to_string(trial));
  }
  cr.finish();
}

TEST_CASE("criterion 4: dynamic-programming residuals of the quadratic ansatz") {
  Criterion cr(4, "PDE residuals vanish at random (s,x) on both benchmarks; a "
                  "corrupted kernel is detected", 5.0);
  Check& c = cr.check();

  struct Instance { GameSpec game; CaseTag tag; };
  std::vector<Instance> instances;
  instances.push_back({make_coupled_benchmark_game(), CaseTag::Case1General});
  instances.push_back({make_tanh_benchmark_game(), CaseTag::Case2});

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> us(0.0, 1.0);
  std::uniform_real_distribution<double> ux(-10.0, 10.0);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    RiccatiTrajectory traj =
        solve_backward(inst.game, inst.tag, 10000, IntegrationMethod::Rk4);
    bool ok = true;
    for (int k = 0; k < 100; ++k) {
      double s = us(gen);
      Eigen::VectorXd x = v1(ux(gen));
      auto [r1, r2] = pde_residual(traj, inst.game, inst.tag, s, x);
      double tol = 1e-6 * (1.0 + x.squaredNorm());
      ok = ok && std::abs(r1) <= tol && std::abs(r2) <= tol;
    }
    c.expect(ok, "residuals exceed 1e-6*(1+|x|^2) on benchmark " +
                     std::to_string(i));

    RiccatiTrajectory bad = traj;
    for (auto& P : bad.P1) P.array() += 0.1;
    auto [r1, r2] = pde_residual(bad, inst.game, inst.tag, 0.5, v1(1.0));
    (void)r2;
    c.expect(std::abs(r1) >= 0.01,
             "corrupted kernel not flagged on benchmark " + std::to_string(i));
  }
  cr.finish();
}

TEST_CASE("criterion 5: Monte-Carlo cost matches the quadratic value") {
  Criterion cr(5, "simulated equilibrium costs equal (1/2) x0' P_i(t0) x0 "
                  "within 3 stderr + 0.02 on both benchmarks", 60.0);
  Check& c = cr.check();

  struct Instance { GameSpec game; CaseTag tag; };
  std::vector<Instance> instances;
  instances.push_back({make_coupled_benchmark_game(), CaseTag::Case1General});
  instances.push_back({make_tanh_benchmark_game(), CaseTag::Case2});

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    RiccatiTrajectory traj =
        solve_backward(inst.game, inst.tag, 10000, IntegrationMethod::Rk4);
    auto [leader, follower] = build_strategies(traj, inst.game, inst.tag);
    SimConfig cfg;
    cfg.n_paths = 100000;
    cfg.n_steps = 1000;
    cfg.seed = 42;
    cfg.initial_state = v1(1.0);
    ValueGapReport gap =
        estimate_value_gap(inst.game, traj, leader, follower, cfg);
    c.expect(std::abs(gap.gap1) <= 3.0 * gap.stderr1 + 0.02,
             "leader value gap " + std::to_string(gap.gap1) +
                 " too large on benchmark " + std::to_string(i));
    c.expect(std::abs(gap.gap2) <= 3.0 * gap.stderr2 + 0.02,
             "follower value gap " + std::to_string(gap.gap2) +
                 " too large on benchmark " + std::to_string(i));
  }
  cr.finish();
}

TEST_CASE("criterion 6: deviations never pay under common random numbers") {
  Criterion cr(6, "unilateral perturbations raise the deviator's cost for "
                  "every magnitude, both players, both benchmarks", 120.0);
  Check& c = cr.check();

  struct Instance { GameSpec game; CaseTag tag; };
  std::vector<Instance> instances;
  instances.push_back({make_coupled_benchmark_game(), CaseTag::Case1General});
  instances.push_back({make_tanh_benchmark_game(), CaseTag::Case2});

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    RiccatiTrajectory traj =
        solve_backward(inst.game, inst.tag, 10000, IntegrationMethod::Rk4);
    auto [leader, follower] = build_strategies(traj, inst.game, inst.tag);
    SimConfig cfg;
    cfg.n_paths = 10000;
    cfg.n_steps = 1000;
    cfg.seed = 42;
    cfg.initial_state = v1(1.0);

    for (auto target : {PerturbationFamily::Target::Leader,
                        PerturbationFamily::Target::Follower}) {
      PerturbationFamily fam = default_family(
          target, PerturbationFamily::Kind::GainOffset, 1, 1);
      VerificationReport rep =
          stackelberg_inequality_test(inst.game, leader, follower, fam, cfg);
      c.expect(rep.all_pass,
               "a deviation cell fails the inequality on benchmark " +
                   std::to_string(i));
      bool zero_is_zero = false;
      for (const auto& cell : rep.cells)
        if (cell.eps == 0.0) zero_is_zero = cell.deltaJ == 0.0;
      c.expect(zero_is_zero,
               "unperturbed control point is not bitwise zero on benchmark " +
                   std::to_string(i));
      if (i == 1 && target == PerturbationFamily::Target::Leader) {
        CurvatureFit fit = curvature_check(rep);
        c.expect(fit.c > 0.0, "leader deviation curvature not positive");
      }
    }
  }
  cr.finish();
}

TEST_CASE("criterion 7: integrator convergence order") {
  Criterion cr(7, "per-halving error reduction vs the tanh oracle: rk4 >= 15x, "
                  "euler >= 1.9x", 30.0);
  Check& c = cr.check();

  GameSpec g = make_tanh_benchmark_game();
  for (auto method : {IntegrationMethod::Rk4, IntegrationMethod::Euler}) {
    double prev = 0.0;
    double min_ratio = method == IntegrationMethod::Rk4 ? 15.0 : 1.9;
    for (int K : {250, 500, 1000}) {
      RiccatiTrajectory traj = solve_backward(g, CaseTag::Case2, K, method);
      double err = max_tanh_error(traj);
      if (prev > 0.0)
        c.expect(prev / err >= min_ratio,
                 std::string(to_string(method)) + " error ratio " +
                     std::to_string(prev / err) + " below " +
                     std::to_string(min_ratio) + " at K=" + std::to_string(K));
      prev = err;
    }
  }
  cr.finish();
}

TEST_CASE("criterion 8: reruns produce byte-identical artifacts") {
  Criterion cr(8, "every CLI subcommand is deterministic across reruns", 60.0);
  Check& c = cr.check();

  struct Cmd {
    std::string args;
    std::vector<std::string> artifacts;
  };
  std::vector<Cmd> cmds = {
      {"solve --steps 200", {"trajectory.csv", "gains.csv"}},
      {"simulate --steps 200 --paths 200 --sim-steps 100", {"simulation.csv"}},
      {"verify --steps 200 --paths 200 --sim-steps 100", {"verification.csv"}},
      {"residual --steps 200", {"residuals.csv"}},
      {"example --steps 200",
       {"spec.json", "trajectory.csv", "gains.csv", "figure1.csv"}},
  };
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    std::string base = "acc8_" + std::to_string(i);
    int rc_a = run_cli(cmds[i].args + " --out " + base + "_a");
    int rc_b = run_cli(cmds[i].args + " --out " + base + "_b");
    c.expect(rc_a == 0 && rc_b == 0, "command exited nonzero: " + cmds[i].args);
    for (const auto& art : cmds[i].artifacts) {
      std::string a = slurp(base + "_a/" + art);
      std::string b = slurp(base + "_b/" + art);
      c.expect(!a.empty() && a == b,
               "artifact differs across reruns: " + cmds[i].args + " -> " + art);
    }
  }
  cr.finish();
}
