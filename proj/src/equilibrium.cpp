#include "stackelberg/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stackelberg/csv_io.hpp"

namespace stackelberg {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double min_eigenvalue(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

MatrixXd solve_sym(const MatrixXd& sym_mat, const MatrixXd& rhs,
                   const char* name) {
  Eigen::LDLT<MatrixXd> ldlt(sym_mat);
  if (ldlt.info() != Eigen::Success)
    throw SingularMatrix(std::string("factorization of ") + name + " failed");
  return ldlt.solve(rhs);
}

// Index of the grid cell containing s plus the interpolation weight.
struct GridPos {
  size_t lo;
  double w;
};

GridPos locate(const std::vector<double>& grid, double s) {
  if (grid.empty()) throw OutOfHorizon("empty grid");
  if (s < grid.front() || s > grid.back()) {
    std::ostringstream os;
    os << "time " << s << " outside strategy grid [" << grid.front() << ", "
       << grid.back() << "]";
    throw OutOfHorizon(os.str());
  }
  auto it = std::upper_bound(grid.begin(), grid.end(), s);
  size_t hi = static_cast<size_t>(it - grid.begin());
  if (hi >= grid.size()) return {grid.size() - 2, 1.0};
  if (hi == 0) return {0, 0.0};
  size_t lo = hi - 1;
  return {lo, (s - grid[lo]) / (grid[hi] - grid[lo])};
}

MatrixXd interp(const std::vector<double>& grid,
                const std::vector<MatrixXd>& samples, double s) {
  GridPos p = locate(grid, s);
  return (1.0 - p.w) * samples[p.lo] + p.w * samples[p.lo + 1];
}

VectorXd interp_vec(const std::vector<double>& grid,
                    const std::vector<VectorXd>& samples, double s) {
  GridPos p = locate(grid, s);
  return (1.0 - p.w) * samples[p.lo] + p.w * samples[p.lo + 1];
}

void check_finite(const MatrixXd& m, const char* name, double s) {
  if (!m.allFinite()) {
    std::ostringstream os;
    os << name << " gain non-finite at s=" << s;
    throw NonFiniteError(os.str());
  }
}

}  // namespace

std::pair<FeedbackStrategy, FeedbackStrategy> build_strategies(
    const RiccatiTrajectory& traj, const GameSpec& game, CaseTag tag) {
  const int m1 = game.dims.m1, m2 = game.dims.m2, n = game.dims.n;
  FeedbackStrategy leader, follower;
  leader.kind = FeedbackStrategy::Kind::Leader;
  follower.kind = FeedbackStrategy::Kind::Follower;
  leader.grid = follower.grid = traj.grid;
  const size_t K1 = traj.grid.size();
  leader.Kx.resize(K1);
  leader.offset.assign(K1, VectorXd::Zero(m1));
  follower.Kx.resize(K1);
  follower.Ku.resize(K1);
  follower.offset.assign(K1, VectorXd::Zero(m2));

  for (size_t k = 0; k < K1; ++k) {
    if (!traj.solvable[k]) {
      std::ostringstream os;
      os << "trajectory not solvable at s=" << traj.grid[k];
      throw ConditionViolation(os.str());
    }
    const CoefficientSnapshot snap = snapshot(game, traj.grid[k]);
    const MatrixXd& P1 = traj.P1[k];
    const MatrixXd& P2 = traj.P2[k];
    if (tag == CaseTag::Case2) {
      leader.Kx[k] = -solve_sym(snap.cost1.R11,
                                (snap.B1.transpose() * P1).eval(), "R111");
      follower.Kx[k] = MatrixXd::Zero(m2, n);
      follower.Ku[k] = MatrixXd::Zero(m2, m1);
    } else {
      const MatrixXd& R111 = snap.cost1.R11;
      const MatrixXd& R112 = snap.cost1.R12;
      const MatrixXd& R212 = snap.cost2.R12;
      const MatrixXd& R222 = snap.cost2.R22;
      MatrixXd R222iB2t = solve_sym(R222, snap.B2.transpose(), "R222");
      MatrixXd Delta =
          R212 * solve_sym(R222, R112.transpose(), "R222") +
          R112 * solve_sym(R222, R212.transpose(), "R222") - R111;
      Delta = 0.5 * (Delta + Delta.transpose()).eval();
      MatrixXd Gamma = (snap.B1.transpose() - R212 * R222iB2t) * P1 -
                       R112 * R222iB2t * P2;
      leader.Kx[k] = solve_sym(Delta, Gamma, "Delta");
      follower.Kx[k] = -R222iB2t * P2;
      follower.Ku[k] = -solve_sym(R222, R212.transpose(), "R222");
    }
    check_finite(leader.Kx[k], "leader", traj.grid[k]);
    check_finite(follower.Kx[k], "follower Kvx", traj.grid[k]);
    check_finite(follower.Ku[k], "follower Kvu", traj.grid[k]);
  }
  return {std::move(leader), std::move(follower)};
}

StrategyGains gains_at(const FeedbackStrategy& strategy, double s) {
  StrategyGains g;
  g.Kx = interp(strategy.grid, strategy.Kx, s);
  if (strategy.kind == FeedbackStrategy::Kind::Follower)
    g.Ku = interp(strategy.grid, strategy.Ku, s);
  g.offset = interp_vec(strategy.grid, strategy.offset, s);
  return g;
}

Eigen::VectorXd eval_strategy(const FeedbackStrategy& strategy, double s,
                              const VectorXd& x) {
  if (strategy.kind != FeedbackStrategy::Kind::Leader)
    throw DimensionMismatch("follower strategy needs the leader control u");
  StrategyGains g = gains_at(strategy, s);
  return g.Kx * x + g.offset;
}

Eigen::VectorXd eval_strategy(const FeedbackStrategy& strategy, double s,
                              const VectorXd& x, const VectorXd& u) {
  if (strategy.kind != FeedbackStrategy::Kind::Follower)
    throw DimensionMismatch("leader strategy takes no u argument");
  StrategyGains g = gains_at(strategy, s);
  return g.Kx * x + g.Ku * u + g.offset;
}

double value(const RiccatiTrajectory& traj, int player, double s,
             const VectorXd& x) {
  if (player != 1 && player != 2)
    throw DimensionMismatch("player must be 1 or 2");
  MatrixXd P = interp(traj.grid, player == 1 ? traj.P1 : traj.P2, s);
  return 0.5 * x.dot(P * x);
}

std::pair<double, double> pde_residual(const RiccatiTrajectory& traj,
                                       const GameSpec& game, CaseTag tag,
                                       double s, const VectorXd& x) {
  auto violations = case_preconditions(game, tag);
  if (!violations.empty())
    throw ConditionViolation("case preconditions violated in pde_residual");

  const CoefficientSnapshot snap = snapshot(game, s);
  MatrixXd P1 = interp(traj.grid, traj.P1, s);
  MatrixXd P2 = interp(traj.grid, traj.P2, s);
  MatrixXd dP1 = interp(traj.grid, traj.dP1, s);
  MatrixXd dP2 = interp(traj.grid, traj.dP2, s);
  VectorXd g1 = P1 * x;  // ∂V1/∂x
  VectorXd g2 = P2 * x;  // ∂V2/∂x

  double F1 = 0.0, F2 = 0.0;
  if (tag == CaseTag::Case2) {
    const MatrixXd& R111 = snap.cost1.R11;
    VectorXd mu0 = -solve_sym(R111, (snap.B1.transpose() * g1).eval(), "R111");
    F1 = 0.5 * mu0.dot(R111 * mu0) + g1.dot(snap.B1 * mu0) +
         0.5 * x.dot(snap.cost1.Q * x) + g1.dot(snap.A * x);
    F2 = 0.5 * x.dot(snap.cost2.Q * x) + g2.dot(snap.A * x) +
         g2.dot(snap.B1 * mu0);
  } else {
    const MatrixXd& R111 = snap.cost1.R11;
    const MatrixXd& R112 = snap.cost1.R12;
    const MatrixXd& R212 = snap.cost2.R12;
    const MatrixXd& R222 = snap.cost2.R22;
    MatrixXd R222iB2t = solve_sym(R222, snap.B2.transpose(), "R222");
    MatrixXd R222iR112t = solve_sym(R222, R112.transpose(), "R222");
    MatrixXd R222iR212t = solve_sym(R222, R212.transpose(), "R222");
    MatrixXd Delta = R212 * R222iR112t + R112 * R222iR212t - R111;
    Delta = 0.5 * (Delta + Delta.transpose()).eval();
    if (!(min_eigenvalue(-Delta) > kConditionTol))
      throw ConditionViolation("leader condition matrix not definite in pde_residual");

    MatrixXd Xi = snap.B1.transpose() - R212 * R222iB2t;  // m1×n
    VectorXd w = Xi * g1 - R112 * R222iB2t * g2;          // m1
    VectorXd Dw = solve_sym(Delta, w, "Delta");
    MatrixXd mid = 0.5 * R111 - R212 * R222iR112t;
    F1 = Dw.dot(mid * Dw) + w.dot(Dw) + 0.5 * x.dot(snap.cost1.Q * x) +
         0.5 * (snap.C * x).dot(P1 * (snap.C * x)) + g1.dot(snap.A * x) -
         g1.dot(snap.B2 * R222iB2t * g2);
    MatrixXd Kmat = R212 * R222iR212t;
    F2 = -0.5 * Dw.dot(Kmat * Dw) + (Xi * g2).dot(Dw) +
         0.5 * x.dot(snap.cost2.Q * x) +
         0.5 * (snap.C * x).dot(P2 * (snap.C * x)) + g2.dot(snap.A * x) -
         0.5 * g2.dot(snap.B2 * R222iB2t * g2);
  }
  double r1 = 0.5 * x.dot(dP1 * x) + F1;
  double r2 = 0.5 * x.dot(dP2 * x) + F2;
  return {r1, r2};
}

void write_gains_csv(const FeedbackStrategy& leader,
                     const FeedbackStrategy& follower,
                     const std::string& path) {
  if (leader.grid.empty() || leader.grid != follower.grid)
    throw IoError("leader/follower gain grids differ");
  const Eigen::Index m1 = leader.Kx.front().rows();
  const Eigen::Index m2 = follower.Kx.front().rows();
  const Eigen::Index n = leader.Kx.front().cols();
  std::ostringstream os;
  os << "s";
  for (Eigen::Index i = 0; i < m1; ++i)
    for (Eigen::Index j = 0; j < n; ++j) os << ",Ku_" << (i + 1) << (j + 1);
  for (Eigen::Index i = 0; i < m2; ++i)
    for (Eigen::Index j = 0; j < n; ++j) os << ",Kvx_" << (i + 1) << (j + 1);
  for (Eigen::Index i = 0; i < m2; ++i)
    for (Eigen::Index j = 0; j < m1; ++j) os << ",Kvu_" << (i + 1) << (j + 1);
  os << "\n";
  for (size_t k = 0; k < leader.grid.size(); ++k) {
    os << fmt17(leader.grid[k]);
    for (Eigen::Index i = 0; i < m1; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        os << "," << fmt17(leader.Kx[k](i, j));
    for (Eigen::Index i = 0; i < m2; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        os << "," << fmt17(follower.Kx[k](i, j));
    for (Eigen::Index i = 0; i < m2; ++i)
      for (Eigen::Index j = 0; j < m1; ++j)
        os << "," << fmt17(follower.Ku[k](i, j));
    os << "\n";
  }
  atomic_write(path, os.str());
}

}  // namespace stackelberg
