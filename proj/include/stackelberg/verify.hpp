#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stackelberg/equilibrium.hpp"
#include "stackelberg/sde_sim.hpp"

namespace stackelberg {

// A one-parameter family of admissible deviations from an equilibrium
// strategy. gain_offset shifts the state gain by ε·direction; constant_offset
// adds ε·direction_vec as an affine offset. direction is normalized to unit
// Frobenius norm on construction.
struct PerturbationFamily {
  enum class Target { Leader, Follower };
  enum class Kind { GainOffset, ConstantOffset };
  Target target = Target::Leader;
  Kind kind = Kind::GainOffset;
  std::vector<double> magnitudes;  // should include the ε = 0 control point
  Eigen::MatrixXd direction;       // m×n gain direction (gain_offset)
  Eigen::VectorXd direction_vec;   // m offset direction (constant_offset)
};

// Default magnitudes {0, ±0.05, ±0.1, ±0.2} and an all-ones unit direction.
PerturbationFamily default_family(PerturbationFamily::Target target,
                                  PerturbationFamily::Kind kind, int m, int n);

struct VerificationCell {
  double eps = 0.0;
  double deltaJ = 0.0;   // J_target(perturbed) − J_target(equilibrium)
  double stderr_ = 0.0;  // stderr of the common-random-number differences
  bool pass = false;
};

struct VerificationReport {
  PerturbationFamily::Target target;
  PerturbationFamily::Kind kind;
  std::vector<VerificationCell> cells;
  bool all_pass = false;
};

// Relative Euler-bias allowance in the pass criterion
// ΔJ ≥ −3·stderr − kBiasAllowance·(1+|ΔJ|).
inline constexpr double kBiasAllowance = 0.02;

FeedbackStrategy perturb(const FeedbackStrategy& strategy,
                         const PerturbationFamily& family, double eps);

// For each ε simulates the perturbed strategy against the equilibrium with
// identical noise draws and reports the per-path cost difference of the
// targeted player. The follower test holds the leader at equilibrium; the
// leader test keeps the follower's reaction map fixed, so it responds to the
// perturbed control through its K_vu term.
VerificationReport stackelberg_inequality_test(const GameSpec& game,
                                               const FeedbackStrategy& leader,
                                               const FeedbackStrategy& follower,
                                               const PerturbationFamily& family,
                                               const SimConfig& cfg);

struct CurvatureFit {
  double c = 0.0;         // ΔJ ≈ c·ε²
  double residual = 0.0;  // RMS residual of the fit
};

// Least-squares fit of ΔJ against ε². Requires at least 5 magnitudes
// including 0, symmetric about 0.
CurvatureFit curvature_check(const VerificationReport& report);

// CSV: target,kind,eps,deltaJ,stderr,pass
void write_verification_csv(const std::vector<VerificationReport>& reports,
                            const std::string& path);
std::string verification_summary(const VerificationReport& report);

}  // namespace stackelberg
