#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stackelberg/lq_model.hpp"

namespace stackelberg {

// Coefficient-restriction pattern of the solvable special cases.
enum class CaseTag { Case1General, Case1Reduced, Case2 };

enum class IntegrationMethod { Rk4, Euler };

const char* to_string(CaseTag tag);
const char* to_string(IntegrationMethod m);

// Backward solution samples of the coupled Riccati system on a uniform grid
// s_0 = t0 < ... < s_K = T. dP1/dP2 hold the analytic right-hand side dP/ds
// evaluated at the solution samples; margins are the smallest eigenvalues of
// the per-case monitored condition matrices.
struct RiccatiTrajectory {
  std::vector<double> grid;
  std::vector<Eigen::MatrixXd> P1, P2;
  std::vector<Eigen::MatrixXd> dP1, dP2;
  std::vector<unsigned char> solvable;
  std::vector<double> margin_follower;   // e.g. λ_min(R222) or λ_min(D2ᵀP2D2+R222)
  std::vector<double> margin_leader;     // e.g. λ_min(R111 - R212R222⁻¹R112ᵀ - R112R222⁻¹R212ᵀ)
  std::vector<double> presym_residual;   // ‖RHS - RHSᵀ‖∞ before symmetrization
};

// One right-hand-side evaluation (derivatives in original time orientation).
struct RiccatiRhs {
  Eigen::MatrixXd dP1, dP2;
  double margin_follower = 0.0;
  double margin_leader = 0.0;
  double presym1 = 0.0, presym2 = 0.0;
};

// Threshold on the monitored smallest eigenvalues.
inline constexpr double kConditionTol = 1e-10;
// Any trajectory entry above this magnitude is treated as finite-time escape.
inline constexpr double kBlowUpThreshold = 1e12;

// Lists the coefficients the case requires to vanish but that are nonzero.
std::vector<std::string> case_preconditions(const GameSpec& game, CaseTag tag);

RiccatiRhs rhs_case1(const CoefficientSnapshot& snap, const Eigen::MatrixXd& P1,
                     const Eigen::MatrixXd& P2);
RiccatiRhs rhs_case1_reduced(const CoefficientSnapshot& snap,
                             const Eigen::MatrixXd& P1,
                             const Eigen::MatrixXd& P2);
RiccatiRhs rhs_case2(const CoefficientSnapshot& snap, const Eigen::MatrixXd& P1,
                     const Eigen::MatrixXd& P2);

// Dispatch on the case tag.
RiccatiRhs riccati_rhs(const CoefficientSnapshot& snap, CaseTag tag,
                       const Eigen::MatrixXd& P1, const Eigen::MatrixXd& P2);

// Integrates the time-reversed system dP/dr = -RHS(T-r, P) forward from the
// terminal data P1(T)=L1, P2(T)=L2 with fixed step h=(T-t0)/steps. Symmetrizes
// after every stage, records solvability margins at every grid node, and halts
// with ConditionViolation / BlowUp diagnostics naming the failing time.
RiccatiTrajectory solve_backward(const GameSpec& game, CaseTag tag, int steps,
                                 IntegrationMethod method);

struct SolvabilityReport {
  std::vector<double> margin_follower, margin_leader;
  bool margins_ok = false;
  bool yong_zhou_applicable = false;
  bool yong_zhou_holds = false;
  std::string note;
};

SolvabilityReport check_solvability(const RiccatiTrajectory& traj,
                                    const GameSpec& game, CaseTag tag);

// CSV: s,P1_11,...,P1_nn,P2_11,...,P2_nn,margin_follower,margin_leader
// (row-major flattening, 17 significant digits, atomic write).
void write_trajectory_csv(const RiccatiTrajectory& traj,
                          const std::string& path);

}  // namespace stackelberg
