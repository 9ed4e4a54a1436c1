#include "stackelberg/sde_sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stackelberg/counter_rng.hpp"
#include "stackelberg/csv_io.hpp"
#include "stackelberg/errors.hpp"
#include "stackelberg/riccati.hpp"

namespace stackelberg {

double pairwise_sum(const double* v, std::size_t count) {
  if (count <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += v[i];
    return s;
  }
  std::size_t half = count / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, count - half);
}

namespace {

// Closed-loop data for one time step, flattened for the inner loop.
// Dynamics: x' = Fd x + fd (drift), Gd x + gd (diffusion).
// Cost i: ½ xᵀW_i x + w_iᵀx + c_i after substituting u(s,x), v(s,x,u).
struct StepTables {
  int n = 0, m1 = 0, m2 = 0;
  long long steps = 0;
  std::vector<double> Fd, fd, Gd, gd;      // steps×n², steps×n
  std::vector<double> W1, w1, c1, W2, w2, c2;
  // Raw gain tables kept for path dumps.
  std::vector<Eigen::MatrixXd> KL, KV;     // u = KL x + oL, v = KV x + oV
  std::vector<Eigen::VectorXd> oL, oV;
};

void flatten(const Eigen::MatrixXd& M, std::vector<double>& out) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) out.push_back(M(i, j));
}

// Quadratic form of one player's running cost in x after closing the loop.
void closed_loop_cost(const CostSnapshot& c, const Eigen::MatrixXd& KL,
                      const Eigen::VectorXd& oL, const Eigen::MatrixXd& KV,
                      const Eigen::VectorXd& oV, Eigen::MatrixXd& W,
                      Eigen::VectorXd& w, double& c0) {
  // ℓ(x,u,v) = ½xᵀQx + uᵀM1x + vᵀM2x + ½uᵀR11u + uᵀR12v + ½vᵀR22v
  //            + qᵀx + ρ1ᵀu + ρ2ᵀv
  const Eigen::MatrixXd& Q = c.Q;
  Eigen::MatrixXd W0 = Q + 2.0 * KL.transpose() * c.M1 +
                       2.0 * KV.transpose() * c.M2 +
                       KL.transpose() * c.R11 * KL +
                       2.0 * KL.transpose() * c.R12 * KV +
                       KV.transpose() * c.R22 * KV;
  W = 0.5 * (W0 + W0.transpose());
  w = c.q + c.M1.transpose() * oL + c.M2.transpose() * oV +
      KL.transpose() * (c.R11 * oL + c.R12 * oV + c.rho1) +
      KV.transpose() * (c.R22 * oV + c.R12.transpose() * oL + c.rho2);
  c0 = 0.5 * oL.dot(c.R11 * oL) + oL.dot(c.R12 * oV) +
       0.5 * oV.dot(c.R22 * oV) + c.rho1.dot(oL) + c.rho2.dot(oV);
}

StepTables build_tables(const GameSpec& game, const FeedbackStrategy& leader,
                        const FeedbackStrategy& follower, double start,
                        long long n_steps, double h) {
  StepTables t;
  t.n = game.dims.n;
  t.m1 = game.dims.m1;
  t.m2 = game.dims.m2;
  t.steps = n_steps;
  const int n = t.n;
  t.Fd.reserve(static_cast<std::size_t>(n_steps) * n * n);
  t.Gd.reserve(static_cast<std::size_t>(n_steps) * n * n);
  for (long long k = 0; k < n_steps; ++k) {
    double s = start + static_cast<double>(k) * h;
    CoefficientSnapshot snap = snapshot(game, s);
    StrategyGains gl = gains_at(leader, s);
    StrategyGains gf = gains_at(follower, s);
    // v = Kvx x + Kvu u + oF with u = KL x + oL.
    Eigen::MatrixXd KL = gl.Kx;
    Eigen::VectorXd oL = gl.offset;
    Eigen::MatrixXd KV = gf.Kx + gf.Ku * KL;
    Eigen::VectorXd oV = gf.offset + gf.Ku * oL;

    Eigen::MatrixXd Fd = snap.A + snap.B1 * KL + snap.B2 * KV;
    Eigen::VectorXd fd = snap.b + snap.B1 * oL + snap.B2 * oV;
    Eigen::MatrixXd Gd = snap.C + snap.D1 * KL + snap.D2 * KV;
    Eigen::VectorXd gd = snap.lambda + snap.D1 * oL + snap.D2 * oV;
    flatten(Fd, t.Fd);
    flatten(Gd, t.Gd);
    for (int i = 0; i < n; ++i) t.fd.push_back(fd(i));
    for (int i = 0; i < n; ++i) t.gd.push_back(gd(i));

    Eigen::MatrixXd W;
    Eigen::VectorXd w;
    double c0 = 0.0;
    closed_loop_cost(snap.cost1, KL, oL, KV, oV, W, w, c0);
    flatten(W, t.W1);
    for (int i = 0; i < n; ++i) t.w1.push_back(w(i));
    t.c1.push_back(c0);
    closed_loop_cost(snap.cost2, KL, oL, KV, oV, W, w, c0);
    flatten(W, t.W2);
    for (int i = 0; i < n; ++i) t.w2.push_back(w(i));
    t.c2.push_back(c0);

    t.KL.push_back(KL);
    t.oL.push_back(oL);
    t.KV.push_back(KV);
    t.oV.push_back(oV);
  }
  return t;
}

struct Accumulators {
  std::vector<double> J1, J2;
  std::vector<double> xT;  // n_paths × n, path-major
};

}  // namespace

SimulationResult simulate(const GameSpec& game, const FeedbackStrategy& leader,
                          const FeedbackStrategy& follower,
                          const SimConfig& cfg) {
  const int n = game.dims.n;
  if (cfg.n_paths < 1 || cfg.n_steps < 1)
    throw DimensionMismatch("simulate: n_paths and n_steps must be >= 1");
  if (cfg.initial_state.size() != n)
    throw DimensionMismatch("simulate: initial_state has size " +
                            std::to_string(cfg.initial_state.size()) +
                            ", expected " + std::to_string(n));
  double start = std::isnan(cfg.start_time) ? game.horizon.t0 : cfg.start_time;
  if (start < game.horizon.t0 || start >= game.horizon.T)
    throw HorizonError("simulate: start_time outside [t0, T)");
  const long long K = cfg.n_steps;
  const double h = (game.horizon.T - start) / static_cast<double>(K);
  const double sqh = std::sqrt(h);

  StepTables tb = build_tables(game, leader, follower, start, K, h);

  Eigen::MatrixXd L1 = game.cost1.L, L2 = game.cost2.L;
  Eigen::VectorXd N1 = game.cost1.N, N2 = game.cost2.N;

  const long long P = cfg.n_paths;
  std::vector<double> J1(P), J2(P), xT(static_cast<std::size_t>(P) * n);
  std::vector<double> x(n), xn(n);

  bool dumping = !cfg.dump_paths.empty() && !cfg.dump_file.empty();
  std::ostringstream dump;
  if (dumping) {
    dump << "path_id,s";
    for (int i = 0; i < n; ++i) dump << ",x_" << (i + 1);
    for (int i = 0; i < tb.m1; ++i) dump << ",u_" << (i + 1);
    for (int i = 0; i < tb.m2; ++i) dump << ",v_" << (i + 1);
    dump << "\n";
  }

  for (long long p = 0; p < P; ++p) {
    for (int i = 0; i < n; ++i) x[i] = cfg.initial_state(i);
    double j1 = 0.0, j2 = 0.0;
    bool dump_this =
        dumping && std::find(cfg.dump_paths.begin(), cfg.dump_paths.end(),
                             p) != cfg.dump_paths.end();
    for (long long k = 0; k < K; ++k) {
      const std::size_t base = static_cast<std::size_t>(k);
      const double* Fd = tb.Fd.data() + base * n * n;
      const double* fd = tb.fd.data() + base * n;
      const double* Gd = tb.Gd.data() + base * n * n;
      const double* gd = tb.gd.data() + base * n;
      const double* W1 = tb.W1.data() + base * n * n;
      const double* w1 = tb.w1.data() + base * n;
      const double* W2 = tb.W2.data() + base * n * n;
      const double* w2 = tb.w2.data() + base * n;

      if (dump_this) {
        double s = start + static_cast<double>(k) * h;
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
        Eigen::VectorXd u = tb.KL[base] * xv + tb.oL[base];
        Eigen::VectorXd v = tb.KV[base] * xv + tb.oV[base];
        dump << p << "," << fmt17(s);
        for (int i = 0; i < n; ++i) dump << "," << fmt17(x[i]);
        for (int i = 0; i < tb.m1; ++i) dump << "," << fmt17(u(i));
        for (int i = 0; i < tb.m2; ++i) dump << "," << fmt17(v(i));
        dump << "\n";
      }

      double xi = rng::standard_normal(cfg.seed, static_cast<std::uint64_t>(p),
                                       static_cast<std::uint64_t>(k));
      double l1 = tb.c1[base], l2 = tb.c2[base];
      for (int i = 0; i < n; ++i) {
        double drift = fd[i], diff = gd[i], q1 = 0.0, q2 = 0.0;
        const double* Fr = Fd + static_cast<std::size_t>(i) * n;
        const double* Gr = Gd + static_cast<std::size_t>(i) * n;
        const double* W1r = W1 + static_cast<std::size_t>(i) * n;
        const double* W2r = W2 + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
          drift += Fr[j] * x[j];
          diff += Gr[j] * x[j];
          q1 += W1r[j] * x[j];
          q2 += W2r[j] * x[j];
        }
        l1 += (0.5 * q1 + w1[i]) * x[i];
        l2 += (0.5 * q2 + w2[i]) * x[i];
        xn[i] = x[i] + h * drift + sqh * xi * diff;
      }
      j1 += h * l1;
      j2 += h * l2;
      for (int i = 0; i < n; ++i) {
        x[i] = xn[i];
        if (!(std::abs(x[i]) < kBlowUpThreshold))
          throw NonFiniteError("simulate: path " + std::to_string(p) +
                               " exceeded 1e12 at step " + std::to_string(k));
      }
    }
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    j1 += 0.5 * xv.dot(L1 * xv) + N1.dot(xv);
    j2 += 0.5 * xv.dot(L2 * xv) + N2.dot(xv);
    J1[p] = j1;
    J2[p] = j2;
    for (int i = 0; i < n; ++i) xT[static_cast<std::size_t>(p) * n + i] = x[i];
  }

  SimulationResult res;
  const auto count = static_cast<std::size_t>(P);
  res.J1_mean = pairwise_sum(J1.data(), count) / static_cast<double>(P);
  res.J2_mean = pairwise_sum(J2.data(), count) / static_cast<double>(P);
  if (P > 1) {
    std::vector<double> dev(count);
    for (std::size_t p = 0; p < count; ++p) {
      double d = J1[p] - res.J1_mean;
      dev[p] = d * d;
    }
    res.J1_stderr = std::sqrt(pairwise_sum(dev.data(), count) /
                              (static_cast<double>(P - 1) * P));
    for (std::size_t p = 0; p < count; ++p) {
      double d = J2[p] - res.J2_mean;
      dev[p] = d * d;
    }
    res.J2_stderr = std::sqrt(pairwise_sum(dev.data(), count) /
                              (static_cast<double>(P - 1) * P));
  }
  res.terminal_state_mean.resize(n);
  std::vector<double> comp(count);
  for (int i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < count; ++p) comp[p] = xT[p * n + i];
    res.terminal_state_mean(i) =
        pairwise_sum(comp.data(), count) / static_cast<double>(P);
  }
  if (!std::isfinite(res.J1_mean) || !std::isfinite(res.J2_mean))
    throw NonFiniteError("simulate: non-finite cost mean");
  res.J1_paths = std::move(J1);
  res.J2_paths = std::move(J2);

  if (dumping) atomic_write(cfg.dump_file, dump.str());
  return res;
}

ValueGapReport estimate_value_gap(const GameSpec& game,
                                  const RiccatiTrajectory& traj,
                                  const FeedbackStrategy& leader,
                                  const FeedbackStrategy& follower,
                                  const SimConfig& cfg) {
  double start = std::isnan(cfg.start_time) ? game.horizon.t0 : cfg.start_time;
  SimulationResult sim = simulate(game, leader, follower, cfg);
  ValueGapReport rep;
  rep.value1 = value(traj, 1, start, cfg.initial_state);
  rep.value2 = value(traj, 2, start, cfg.initial_state);
  rep.gap1 = sim.J1_mean - rep.value1;
  rep.gap2 = sim.J2_mean - rep.value2;
  rep.stderr1 = sim.J1_stderr;
  rep.stderr2 = sim.J2_stderr;
  return rep;
}

}  // namespace stackelberg
