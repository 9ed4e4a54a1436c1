#include "stackelberg/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace stackelberg {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatch(what);
}

void check_args(const CoefficientSnapshot& snap, const VectorXd& x,
                const VectorXd* mu, const VectorXd* nu,
                const CostateInputs& costates) {
  const Dims& d = snap.dims;
  require(x.size() == d.n, "x has wrong length");
  if (mu) require(mu->size() == d.m1, "mu has wrong length");
  if (nu) require(nu->size() == d.m2, "nu has wrong length");
  require(costates.p1.size() == 0 || costates.p1.size() == d.n,
          "p1 has wrong length");
  require(costates.p2.size() == 0 || costates.p2.size() == d.n,
          "p2 has wrong length");
  require(costates.Ap.size() == 0 ||
              (costates.Ap.rows() == d.n && costates.Ap.cols() == d.n),
          "Ap has wrong shape");
  require(costates.App.size() == 0 ||
              (costates.App.rows() == d.n && costates.App.cols() == d.n),
          "App has wrong shape");
}

double min_eigenvalue(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// LDLT solve guarded by a positive-definiteness check done by the caller.
MatrixXd pd_solve(const MatrixXd& sym, const MatrixXd& rhs,
                  const std::string& name) {
  Eigen::LDLT<MatrixXd> ldlt(sym);
  if (ldlt.info() != Eigen::Success)
    throw SingularMatrix("factorization of " + name + " failed");
  return ldlt.solve(rhs);
}

// Running-cost integrand of player i at (x, mu, nu).
double running_cost(const CostSnapshot& c, const VectorXd& x,
                    const VectorXd& mu, const VectorXd& nu) {
  double quad = x.dot(c.Q * x) + 2.0 * mu.dot(c.M1 * x) +
                2.0 * nu.dot(c.M2 * x) + mu.dot(c.R11 * mu) +
                2.0 * mu.dot(c.R12 * nu) + nu.dot(c.R22 * nu);
  double lin = c.q.dot(x) + c.rho1.dot(mu) + c.rho2.dot(nu);
  return 0.5 * quad + lin;
}

}  // namespace

double hamiltonian_value(int player, const CoefficientSnapshot& snap,
                         const VectorXd& x, const VectorXd& mu,
                         const VectorXd& nu, const CostateInputs& costates) {
  require(player == 1 || player == 2, "player must be 1 or 2");
  check_args(snap, x, &mu, &nu, costates);
  const VectorXd& p = (player == 1) ? costates.p1 : costates.p2;
  const MatrixXd& Amat = (player == 1) ? costates.Ap : costates.App;
  require(p.size() == snap.dims.n, "missing costate for requested player");
  require(Amat.rows() == snap.dims.n, "missing second-order costate");

  VectorXd drift = snap.A * x + snap.B1 * mu + snap.B2 * nu + snap.b;
  VectorXd sigma = snap.C * x + snap.D1 * mu + snap.D2 * nu + snap.lambda;
  const CostSnapshot& cost = (player == 1) ? snap.cost1 : snap.cost2;
  return p.dot(drift) + 0.5 * sigma.dot(Amat * sigma) +
         running_cost(cost, x, mu, nu);
}

FollowerGains follower_gains(const CoefficientSnapshot& snap,
                             const CostateInputs& costates) {
  const Dims& d = snap.dims;
  require(costates.App.rows() == d.n && costates.App.cols() == d.n,
          "App has wrong shape");
  require(costates.p2.size() == d.n, "p2 has wrong length");
  const MatrixXd& App = costates.App;
  const CostSnapshot& c = snap.cost2;

  FollowerGains g;
  g.Rhat2 = snap.D2.transpose() * App * snap.D2 + c.R22;
  MatrixXd Rhat2s = 0.5 * (g.Rhat2 + g.Rhat2.transpose());
  double lmin = min_eigenvalue(Rhat2s);
  if (!(lmin > kConvexityTol)) {
    std::ostringstream os;
    os << "Rhat2 not positive definite at s=" << snap.s
       << " (min eigenvalue " << lmin << ")";
    throw ConvexityViolation(os.str());
  }
  g.Psi = pd_solve(Rhat2s, snap.D2.transpose() * App * snap.C + c.M2, "Rhat2");
  g.Phi = pd_solve(Rhat2s,
                   snap.D2.transpose() * App * snap.D1 + c.R21.transpose(),
                   "Rhat2");
  g.psi = pd_solve(Rhat2s,
                   (snap.B2.transpose() * costates.p2 +
                    snap.D2.transpose() * App * snap.lambda + c.rho2)
                       .eval(),
                   "Rhat2");
  return g;
}

Eigen::VectorXd follower_best_response(const CoefficientSnapshot& snap,
                                       const VectorXd& x, const VectorXd& mu,
                                       const CostateInputs& costates) {
  check_args(snap, x, &mu, nullptr, costates);
  FollowerGains g = follower_gains(snap, costates);
  return -g.Psi * x - g.Phi * mu - g.psi;
}

LeaderStationarity leader_stationarity(const CoefficientSnapshot& snap,
                                       const VectorXd& x,
                                       const CostateInputs& costates,
                                       const FollowerGains& g) {
  check_args(snap, x, nullptr, nullptr, costates);
  const Dims& d = snap.dims;
  require(costates.Ap.rows() == d.n && costates.Ap.cols() == d.n,
          "Ap has wrong shape");
  require(costates.p1.size() == d.n, "p1 has wrong length");
  const MatrixXd& Ap = costates.Ap;
  const CostSnapshot& c = snap.cost1;
  const MatrixXd& Phi = g.Phi;
  const MatrixXd& Psi = g.Psi;
  const VectorXd& psi = g.psi;

  LeaderStationarity out;
  out.Rhat1 = snap.D1.transpose() * Ap * snap.D1 -
              2.0 * Phi.transpose() * snap.D2.transpose() * Ap * snap.D1 +
              Phi.transpose() * snap.D2.transpose() * Ap * snap.D2 * Phi +
              c.R11 - 2.0 * Phi.transpose() * c.R12.transpose() +
              Phi.transpose() * c.R22 * Phi;

  // Transposed term-by-term from the printed row expression for Y.
  MatrixXd D1tAp = snap.D1.transpose() * Ap;   // m1×n
  MatrixXd PhiD2tAp = Phi.transpose() * snap.D2.transpose() * Ap;  // m1×n
  out.Yt = snap.B1.transpose() * costates.p1 -
           Phi.transpose() * snap.B2.transpose() * costates.p1 +
           D1tAp * snap.C * x - PhiD2tAp * snap.C * x -
           D1tAp * snap.D2 * Psi * x - D1tAp * snap.D2 * psi +
           D1tAp * snap.lambda + PhiD2tAp * snap.D2 * Psi * x +
           PhiD2tAp * snap.D2 * psi - PhiD2tAp * snap.lambda + c.M1 * x -
           Phi.transpose() * c.M2 * x - c.R12 * Psi * x - c.R12 * psi +
           Phi.transpose() * c.R22 * Psi * x + Phi.transpose() * c.R22 * psi +
           c.rho1 - Phi.transpose() * c.rho2;

  out.Rhat1sym = 0.5 * (out.Rhat1 + out.Rhat1.transpose());
  return out;
}

Eigen::VectorXd leader_best_response(const CoefficientSnapshot& snap,
                                     const VectorXd& x,
                                     const CostateInputs& costates) {
  FollowerGains g = follower_gains(snap, costates);
  LeaderStationarity st = leader_stationarity(snap, x, costates, g);
  double lmin = min_eigenvalue(st.Rhat1sym);
  if (!(lmin > kConvexityTol)) {
    std::ostringstream os;
    os << "Rhat1sym not positive definite at s=" << snap.s
       << " (min eigenvalue " << lmin << ")";
    throw ConvexityViolation(os.str());
  }
  Eigen::LDLT<MatrixXd> ldlt(st.Rhat1sym);
  if (ldlt.info() != Eigen::Success)
    throw SingularMatrix("factorization of Rhat1sym failed");
  return ldlt.solve((-st.Yt).eval());
}

ConvexityReport check_convexity(const CoefficientSnapshot& snap,
                                const CostateInputs& costates) {
  ConvexityReport rep;
  CostateInputs cs = costates;
  const int n = snap.dims.n;
  if (cs.p1.size() == 0) cs.p1 = VectorXd::Zero(n);
  if (cs.p2.size() == 0) cs.p2 = VectorXd::Zero(n);
  if (cs.Ap.size() == 0) cs.Ap = MatrixXd::Zero(n, n);
  if (cs.App.size() == 0) cs.App = MatrixXd::Zero(n, n);
  MatrixXd Rhat2 = snap.D2.transpose() * cs.App * snap.D2 + snap.cost2.R22;
  rep.min_eig_follower = min_eigenvalue(0.5 * (Rhat2 + Rhat2.transpose()));
  rep.follower_ok = rep.min_eig_follower > kConvexityTol;
  if (!rep.follower_ok) {
    // Phi is undefined without an invertible Rhat2, so the leader's Hessian
    // cannot be formed.
    rep.min_eig_leader = std::numeric_limits<double>::quiet_NaN();
    rep.leader_ok = false;
    return rep;
  }
  FollowerGains g = follower_gains(snap, cs);
  LeaderStationarity st = leader_stationarity(
      snap, VectorXd::Zero(snap.dims.n), cs, g);
  rep.min_eig_leader = min_eigenvalue(st.Rhat1sym);
  rep.leader_ok = rep.min_eig_leader > kConvexityTol;
  return rep;
}

}  // namespace stackelberg
