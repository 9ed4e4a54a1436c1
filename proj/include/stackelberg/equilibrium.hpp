#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "stackelberg/riccati.hpp"

namespace stackelberg {

// Affine state-feedback strategy with gains tabulated on the Riccati grid and
// interpolated linearly in time. Leader: u(s,x) = Kx(s)x + offset(s).
// Follower: v(s,x,u) = Kx(s)x + Ku(s)u + offset(s).
struct FeedbackStrategy {
  enum class Kind { Leader, Follower };
  Kind kind = Kind::Leader;
  std::vector<double> grid;
  std::vector<Eigen::MatrixXd> Kx;       // m1×n or m2×n
  std::vector<Eigen::MatrixXd> Ku;       // follower only, m2×m1
  std::vector<Eigen::VectorXd> offset;   // zero at equilibrium
};

// Gains at the printed case formulas, node by node. The resulting gains agree
// with the closed-form Hamiltonian best responses evaluated at p_i = P_i x,
// A' = P1, A'' = P2.
std::pair<FeedbackStrategy, FeedbackStrategy> build_strategies(
    const RiccatiTrajectory& traj, const GameSpec& game, CaseTag tag);

// Leader evaluation: u(s,x).
Eigen::VectorXd eval_strategy(const FeedbackStrategy& strategy, double s,
                              const Eigen::VectorXd& x);
// Follower evaluation: v(s,x,u).
Eigen::VectorXd eval_strategy(const FeedbackStrategy& strategy, double s,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u);

// Interpolated gain tables at time s (used by the simulator's precompute).
struct StrategyGains {
  Eigen::MatrixXd Kx, Ku;
  Eigen::VectorXd offset;
};
StrategyGains gains_at(const FeedbackStrategy& strategy, double s);

// V_i(s,x) = (1/2) xᵀ P_i(s) x with P_i interpolated linearly in s.
double value(const RiccatiTrajectory& traj, int player, double s,
             const Eigen::VectorXd& x);

// Left-hand sides of the case PDEs under the quadratic ansatz. The time
// derivative uses the trajectory's stored analytic RHS samples; the spatial
// part is transcribed independently from the PDEs, so the residual detects
// both integration drift and structural mismatches.
std::pair<double, double> pde_residual(const RiccatiTrajectory& traj,
                                       const GameSpec& game, CaseTag tag,
                                       double s, const Eigen::VectorXd& x);

// CSV: s,Ku_11,...,Kvx_11,...,Kvu_11,... on the trajectory grid.
void write_gains_csv(const FeedbackStrategy& leader,
                     const FeedbackStrategy& follower,
                     const std::string& path);

}  // namespace stackelberg
