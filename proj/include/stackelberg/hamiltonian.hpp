#pragma once

#include <Eigen/Dense>

#include "stackelberg/lq_model.hpp"

namespace stackelberg {

// Costate arguments of the Hamiltonians: first-order costates p1, p2 and the
// symmetric second-order arguments Ap (leader) and App (follower).
struct CostateInputs {
  Eigen::VectorXd p1, p2;   // n-vectors
  Eigen::MatrixXd Ap, App;  // n×n symmetric
};

// Completed-square data for the follower's pointwise minimization:
// v* = -Psi x - Phi mu - psi with Hessian Rhat2.
struct FollowerGains {
  Eigen::MatrixXd Rhat2;  // m2×m2, positive definite
  Eigen::MatrixXd Psi;    // m2×n
  Eigen::MatrixXd Phi;    // m2×m1
  Eigen::VectorXd psi;    // m2
};

// Stationarity data of mu -> H1(s,x,mu,T2(mu)): gradient is
// Rhat1sym*mu + Yt where Rhat1sym = (Rhat1+Rhat1ᵀ)/2.
struct LeaderStationarity {
  Eigen::MatrixXd Rhat1;     // m1×m1 (not necessarily symmetric)
  Eigen::VectorXd Yt;        // m1 (the transpose of the row expression Y)
  Eigen::MatrixXd Rhat1sym;  // m1×m1 symmetric
};

struct ConvexityReport {
  bool follower_ok = false;
  bool leader_ok = false;
  double min_eig_follower = 0.0;  // smallest eigenvalue of Rhat2
  double min_eig_leader = 0.0;    // smallest eigenvalue of Rhat1sym
};

// Smallest-eigenvalue threshold for treating a Hessian as positive definite.
inline constexpr double kConvexityTol = 1e-10;

// H_i(s,x,mu,nu,p_i,A) = <p_i, Ax+B1 mu+B2 nu+b> + (1/2) sigmaᵀ A sigma
// + running cost integrand, with sigma = Cx+D1 mu+D2 nu+lambda.
// For player 1 the pair (p1, Ap) is used, for player 2 (p2, App).
double hamiltonian_value(int player, const CoefficientSnapshot& snap,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& nu,
                         const CostateInputs& costates);

// Rhat2 = D2ᵀ App D2 + R222, Psi = Rhat2⁻¹(D2ᵀ App C + M22),
// Phi = Rhat2⁻¹(D2ᵀ App D1 + R212ᵀ), psi = Rhat2⁻¹(B2ᵀ p2 + D2ᵀ App lambda + rho22).
// Throws ConvexityViolation if Rhat2 is not positive definite.
FollowerGains follower_gains(const CoefficientSnapshot& snap,
                             const CostateInputs& costates);

// T2(s,x,mu) = -Psi x - Phi mu - psi.
Eigen::VectorXd follower_best_response(const CoefficientSnapshot& snap,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& mu,
                                       const CostateInputs& costates);

LeaderStationarity leader_stationarity(const CoefficientSnapshot& snap,
                                       const Eigen::VectorXd& x,
                                       const CostateInputs& costates,
                                       const FollowerGains& gains);

// T1(s,x) = argmin_mu H1(s,x,mu,T2(mu)); solves Rhat1sym mu = -Yt.
Eigen::VectorXd leader_best_response(const CoefficientSnapshot& snap,
                                     const Eigen::VectorXd& x,
                                     const CostateInputs& costates);

ConvexityReport check_convexity(const CoefficientSnapshot& snap,
                                const CostateInputs& costates);

}  // namespace stackelberg
