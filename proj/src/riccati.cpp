#include "stackelberg/riccati.hpp"

#include <cmath>
#include <sstream>

#include "stackelberg/csv_io.hpp"

namespace stackelberg {

namespace {

using Eigen::MatrixXd;

const char* kCase1Tag = "case1";
const char* kCase1ReducedTag = "case1-reduced";
const char* kCase2Tag = "case2";

bool coeff_is_zero(const Coeff& c) {
  if (c.is_table()) {
    for (const auto& m : c.samples())
      if (!m.isZero(0.0)) return false;
    return true;
  }
  return c.constant().isZero(0.0);
}

double min_eigenvalue(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

double asymmetry(const MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

// Solve sym_mat * X = rhs via LDLT; caller has already checked definiteness
// of ±sym_mat.
MatrixXd solve_sym(const MatrixXd& sym_mat, const MatrixXd& rhs,
                   const char* name) {
  Eigen::LDLT<MatrixXd> ldlt(sym_mat);
  if (ldlt.info() != Eigen::Success)
    throw SingularMatrix(std::string("factorization of ") + name + " failed");
  return ldlt.solve(rhs);
}

void require_margin(double margin, const char* what, double s) {
  if (!(margin > kConditionTol)) {
    std::ostringstream os;
    os << what << " violated at s=" << s << " (min eigenvalue " << margin
       << ")";
    throw ConditionViolation(os.str());
  }
}

}  // namespace

const char* to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::Case1General: return kCase1Tag;
    case CaseTag::Case1Reduced: return kCase1ReducedTag;
    case CaseTag::Case2: return kCase2Tag;
  }
  return "?";
}

const char* to_string(IntegrationMethod m) {
  return m == IntegrationMethod::Rk4 ? "rk4" : "euler";
}

std::vector<std::string> case_preconditions(const GameSpec& game,
                                            CaseTag tag) {
  std::vector<std::string> violations;
  auto need_zero = [&](const Coeff& c, const char* name) {
    if (!coeff_is_zero(c)) violations.push_back(std::string(name) + " != 0");
  };
  // Common to all cases.
  need_zero(game.dynamics.b, "b");
  need_zero(game.dynamics.D1, "D1");
  need_zero(game.dynamics.lambda, "lambda");
  need_zero(game.cost1.M1, "M11");
  need_zero(game.cost1.M2, "M12");
  need_zero(game.cost2.M1, "M21");
  need_zero(game.cost2.M2, "M22");
  need_zero(game.cost1.R22, "R122");
  need_zero(game.cost2.R11, "R211");
  need_zero(game.cost1.q, "q1");
  need_zero(game.cost1.rho1, "rho11");
  need_zero(game.cost1.rho2, "rho12");
  need_zero(game.cost2.q, "q2");
  need_zero(game.cost2.rho1, "rho21");
  need_zero(game.cost2.rho2, "rho22");
  if (!game.cost1.N.isZero(0.0)) violations.push_back("N1 != 0");
  if (!game.cost2.N.isZero(0.0)) violations.push_back("N2 != 0");

  switch (tag) {
    case CaseTag::Case1General:
      need_zero(game.dynamics.D2, "D2");
      break;
    case CaseTag::Case1Reduced:
      need_zero(game.dynamics.D2, "D2");
      need_zero(game.dynamics.B1, "B1");
      need_zero(game.cost2.R12, "R212");
      break;
    case CaseTag::Case2:
      need_zero(game.dynamics.B2, "B2");
      need_zero(game.dynamics.C, "C");
      need_zero(game.cost2.R12, "R212");
      break;
  }
  return violations;
}

namespace {

// P-independent data of one right-hand-side evaluation, reusable across a
// whole backward sweep when coefficients are constant in time.
struct PreparedRhs {
  CaseTag tag = CaseTag::Case1General;
  MatrixXd A, C, Q1, Q2;
  // Case 1 general
  MatrixXd Delta, Xi, GB, Sb, K;
  Eigen::LDLT<MatrixXd> DeltaL;
  // Case 1 reduced
  MatrixXd W;
  // Case 2
  MatrixXd S1, D2, R222;
  double margin_follower = 0.0, margin_leader = 0.0;
};

PreparedRhs prepare_rhs(const CoefficientSnapshot& snap, CaseTag tag) {
  PreparedRhs p;
  p.tag = tag;
  p.A = snap.A;
  p.C = snap.C;
  p.Q1 = snap.cost1.Q;
  p.Q2 = snap.cost2.Q;
  const MatrixXd& R111 = snap.cost1.R11;
  const MatrixXd& R112 = snap.cost1.R12;  // m1×m2
  const MatrixXd& R212 = snap.cost2.R12;  // m1×m2
  const MatrixXd& R222 = snap.cost2.R22;
  switch (tag) {
    case CaseTag::Case1General: {
      p.margin_follower = min_eigenvalue(R222);
      require_margin(p.margin_follower, "R222 > 0", snap.s);
      MatrixXd R222iB2t = solve_sym(R222, snap.B2.transpose(), "R222");
      MatrixXd R222iR112t = solve_sym(R222, R112.transpose(), "R222");
      MatrixXd R222iR212t = solve_sym(R222, R212.transpose(), "R222");
      // Delta = R212 R222⁻¹ R112ᵀ + R112 R222⁻¹ R212ᵀ - R111 (symmetric, < 0).
      p.Delta = sym(R212 * R222iR112t + R112 * R222iR212t - R111);
      p.margin_leader = min_eigenvalue(-p.Delta);
      require_margin(p.margin_leader,
                     "R111 - R212 R222^-1 R112^T - R112 R222^-1 R212^T > 0",
                     snap.s);
      p.DeltaL.compute(p.Delta);
      if (p.DeltaL.info() != Eigen::Success)
        throw SingularMatrix("factorization of Delta failed");
      p.Xi = snap.B1.transpose() - R212 * R222iB2t;  // m1×n
      p.GB = R112 * R222iB2t;                        // m1×n
      p.Sb = snap.B2 * R222iB2t;                     // n×n
      p.K = R212 * R222iR212t;                       // m1×m1
      break;
    }
    case CaseTag::Case1Reduced: {
      p.margin_follower = min_eigenvalue(R222);
      require_margin(p.margin_follower, "R222 > 0", snap.s);
      p.margin_leader = min_eigenvalue(R111);
      require_margin(p.margin_leader, "R111 > 0", snap.s);
      MatrixXd R222iB2t = solve_sym(R222, snap.B2.transpose(), "R222");
      p.Sb = snap.B2 * R222iB2t;
      // G = R112 R222⁻¹ B2ᵀ, cross-term kernel Gᵀ R111⁻¹ G.
      MatrixXd G = R112 * R222iB2t;  // m1×n
      p.W = G.transpose() * solve_sym(R111, G, "R111");
      break;
    }
    case CaseTag::Case2: {
      p.margin_leader = min_eigenvalue(R111);
      require_margin(p.margin_leader, "R111 > 0", snap.s);
      p.S1 = snap.B1 * solve_sym(R111, snap.B1.transpose(), "R111");
      p.D2 = snap.D2;
      p.R222 = R222;
      break;
    }
  }
  return p;
}

RiccatiRhs eval_prepared(const PreparedRhs& p, double s, const MatrixXd& P1,
                         const MatrixXd& P2) {
  RiccatiRhs out;
  out.margin_follower = p.margin_follower;
  out.margin_leader = p.margin_leader;
  if (p.tag == CaseTag::Case1General && P1.size() == 1 && p.Xi.size() == 1) {
    // Scalar games avoid all matrix temporaries on the hot path.
    const double a = p.A(0, 0), c = p.C(0, 0);
    const double p1 = P1(0, 0), p2 = P2(0, 0);
    const double gamma = p.Xi(0, 0) * p1 - p.GB(0, 0) * p2;
    const double dg = gamma / p.Delta(0, 0);
    const double sb = p.Sb(0, 0);
    const double d1 = -(gamma * dg + c * c * p1 + p.Q1(0, 0) + 2.0 * a * p1 -
                        2.0 * sb * p1 * p2);
    const double d2 = -(-dg * p.K(0, 0) * dg + 2.0 * p2 * p.Xi(0, 0) * dg +
                        c * c * p2 + p.Q2(0, 0) + 2.0 * a * p2 - sb * p2 * p2);
    out.presym1 = 0.0;
    out.presym2 = 0.0;
    out.dP1 = MatrixXd::Constant(1, 1, d1);
    out.dP2 = MatrixXd::Constant(1, 1, d2);
    return out;
  }
  const MatrixXd& A = p.A;
  MatrixXd raw1, raw2;
  switch (p.tag) {
    case CaseTag::Case1General: {
      MatrixXd Gamma = p.Xi * P1 - p.GB * P2;  // m1×n
      MatrixXd DinvGamma = p.DeltaL.solve(Gamma);
      raw1 = -(Gamma.transpose() * DinvGamma + p.C.transpose() * P1 * p.C +
               p.Q1 + P1 * A + A.transpose() * P1 - P1 * p.Sb * P2 -
               P2 * p.Sb * P1);
      raw2 = -(-DinvGamma.transpose() * p.K * DinvGamma +
               P2 * p.Xi.transpose() * DinvGamma +
               DinvGamma.transpose() * p.Xi * P2 + p.C.transpose() * P2 * p.C +
               p.Q2 + P2 * A + A.transpose() * P2 - P2 * p.Sb * P2);
      break;
    }
    case CaseTag::Case1Reduced: {
      raw2 = -(p.C.transpose() * P2 * p.C + p.Q2 + P2 * A + A.transpose() * P2 -
               P2 * p.Sb * P2);
      raw1 = -(p.C.transpose() * P1 * p.C + p.Q1 + P1 * A + A.transpose() * P1 -
               P1 * p.Sb * P2 - P2 * p.Sb * P1 - P2 * p.W * P2);
      break;
    }
    case CaseTag::Case2: {
      out.margin_follower = min_eigenvalue(
          sym(p.D2.transpose() * P2 * p.D2 + p.R222));
      require_margin(out.margin_follower, "D2^T P2 D2 + R222 > 0", s);
      raw1 = -(P1 * A + A.transpose() * P1 + p.Q1 - P1 * p.S1 * P1);
      raw2 = -(P2 * A + A.transpose() * P2 + p.Q2 - P2 * p.S1 * P1 -
               P1 * p.S1 * P2);
      break;
    }
  }
  out.presym1 = asymmetry(raw1);
  out.presym2 = asymmetry(raw2);
  out.dP1 = sym(raw1);
  out.dP2 = sym(raw2);
  return out;
}

}  // namespace

RiccatiRhs rhs_case1(const CoefficientSnapshot& snap, const MatrixXd& P1,
                     const MatrixXd& P2) {
  return eval_prepared(prepare_rhs(snap, CaseTag::Case1General), snap.s, P1,
                       P2);
}

RiccatiRhs rhs_case1_reduced(const CoefficientSnapshot& snap,
                             const MatrixXd& P1, const MatrixXd& P2) {
  return eval_prepared(prepare_rhs(snap, CaseTag::Case1Reduced), snap.s, P1,
                       P2);
}

RiccatiRhs rhs_case2(const CoefficientSnapshot& snap, const MatrixXd& P1,
                     const MatrixXd& P2) {
  return eval_prepared(prepare_rhs(snap, CaseTag::Case2), snap.s, P1, P2);
}

RiccatiRhs riccati_rhs(const CoefficientSnapshot& snap, CaseTag tag,
                       const MatrixXd& P1, const MatrixXd& P2) {
  switch (tag) {
    case CaseTag::Case1General: return rhs_case1(snap, P1, P2);
    case CaseTag::Case1Reduced: return rhs_case1_reduced(snap, P1, P2);
    case CaseTag::Case2: return rhs_case2(snap, P1, P2);
  }
  throw Error("unknown case tag", 2);
}

namespace {

void check_blowup(const MatrixXd& P, double s, const char* name) {
  if (!P.allFinite() || P.cwiseAbs().maxCoeff() > kBlowUpThreshold) {
    std::ostringstream os;
    os << name << " exceeded blow-up threshold " << kBlowUpThreshold
       << " at s=" << s;
    throw BlowUp(os.str());
  }
}

}  // namespace

RiccatiTrajectory solve_backward(const GameSpec& game, CaseTag tag, int steps,
                                 IntegrationMethod method) {
  if (steps < 10) throw DimensionMismatch("solve_backward requires steps >= 10");
  auto violations = case_preconditions(game, tag);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "case preconditions for " << to_string(tag) << " violated:";
    for (const auto& v : violations) os << " " << v << ";";
    throw ConditionViolation(os.str());
  }

  const int K = steps;
  const double t0 = game.horizon.t0;
  const double T = game.horizon.T;
  const double h = (T - t0) / K;

  RiccatiTrajectory traj;
  traj.grid.resize(K + 1);
  for (int k = 0; k <= K; ++k) traj.grid[k] = t0 + k * h;
  traj.grid[K] = T;
  traj.P1.resize(K + 1);
  traj.P2.resize(K + 1);
  traj.dP1.resize(K + 1);
  traj.dP2.resize(K + 1);
  traj.solvable.assign(K + 1, 0);
  traj.margin_follower.assign(K + 1, 0.0);
  traj.margin_leader.assign(K + 1, 0.0);
  traj.presym_residual.assign(K + 1, 0.0);

  // Terminal data, bit-exact.
  traj.P1[K] = game.cost1.L;
  traj.P2[K] = game.cost2.L;

  auto record = [&](int k, const RiccatiRhs& rhs) {
    traj.dP1[k] = rhs.dP1;
    traj.dP2[k] = rhs.dP2;
    traj.margin_follower[k] = rhs.margin_follower;
    traj.margin_leader[k] = rhs.margin_leader;
    traj.presym_residual[k] = std::max(rhs.presym1, rhs.presym2);
    traj.solvable[k] = rhs.margin_follower > kConditionTol &&
                       rhs.margin_leader > kConditionTol;
  };

  // Time-varying tables force a fresh snapshot per evaluation; constant
  // coefficients are snapshotted once.
  auto any_table = [](std::initializer_list<const Coeff*> cs) {
    for (const Coeff* c : cs)
      if (c->is_table()) return true;
    return false;
  };
  const bool constant_coeffs = !any_table(
      {&game.dynamics.A, &game.dynamics.B1, &game.dynamics.B2,
       &game.dynamics.C, &game.dynamics.D1, &game.dynamics.D2,
       &game.dynamics.b, &game.dynamics.lambda, &game.cost1.Q, &game.cost1.M1,
       &game.cost1.M2, &game.cost1.R11, &game.cost1.R12, &game.cost1.R21,
       &game.cost1.R22, &game.cost1.q, &game.cost1.rho1, &game.cost1.rho2,
       &game.cost2.Q, &game.cost2.M1, &game.cost2.M2, &game.cost2.R11,
       &game.cost2.R12, &game.cost2.R21, &game.cost2.R22, &game.cost2.q,
       &game.cost2.rho1, &game.cost2.rho2});
  PreparedRhs prep;
  if (constant_coeffs) prep = prepare_rhs(snapshot(game, t0), tag);

  auto eval = [&](double s, const MatrixXd& P1, const MatrixXd& P2) {
    if (constant_coeffs) return eval_prepared(prep, s, P1, P2);
    return riccati_rhs(snapshot(game, s), tag, P1, P2);
  };

  MatrixXd P1 = traj.P1[K];
  MatrixXd P2 = traj.P2[K];
  for (int k = K; k >= 1; --k) {
    const double s = traj.grid[k];
    const double sm = traj.grid[k - 1];
    const double smid = 0.5 * (s + sm);

    RiccatiRhs node = eval(s, P1, P2);
    record(k, node);

    MatrixXd nP1, nP2;
    if (method == IntegrationMethod::Euler) {
      // dP/dr = -dP/ds, step h in r means step -h in s.
      nP1 = sym(P1 - h * node.dP1);
      nP2 = sym(P2 - h * node.dP2);
    } else {
      const MatrixXd k1a = -node.dP1, k1b = -node.dP2;
      MatrixXd a1 = sym(P1 + 0.5 * h * k1a), a2 = sym(P2 + 0.5 * h * k1b);
      RiccatiRhs r2 = eval(smid, a1, a2);
      const MatrixXd k2a = -r2.dP1, k2b = -r2.dP2;
      MatrixXd b1 = sym(P1 + 0.5 * h * k2a), b2 = sym(P2 + 0.5 * h * k2b);
      RiccatiRhs r3 = eval(smid, b1, b2);
      const MatrixXd k3a = -r3.dP1, k3b = -r3.dP2;
      MatrixXd c1 = sym(P1 + h * k3a), c2 = sym(P2 + h * k3b);
      RiccatiRhs r4 = eval(sm, c1, c2);
      const MatrixXd k4a = -r4.dP1, k4b = -r4.dP2;
      nP1 = sym(P1 + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a));
      nP2 = sym(P2 + (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b));
    }
    check_blowup(nP1, sm, "P1");
    check_blowup(nP2, sm, "P2");
    P1 = std::move(nP1);
    P2 = std::move(nP2);
    traj.P1[k - 1] = P1;
    traj.P2[k - 1] = P2;
  }
  record(0, eval(traj.grid[0], P1, P2));
  return traj;
}

SolvabilityReport check_solvability(const RiccatiTrajectory& traj,
                                    const GameSpec& game, CaseTag tag) {
  SolvabilityReport rep;
  rep.margin_follower = traj.margin_follower;
  rep.margin_leader = traj.margin_leader;
  rep.margins_ok = true;
  for (size_t k = 0; k < traj.grid.size(); ++k)
    rep.margins_ok = rep.margins_ok && traj.solvable[k];

  auto psd_on_grid = [&](const Coeff& c) {
    for (double s : traj.grid)
      if (min_eigenvalue(sym(c.at(s))) < -kConditionTol) return false;
    return true;
  };
  auto pd_on_grid = [&](const Coeff& c) {
    for (double s : traj.grid)
      if (!(min_eigenvalue(sym(c.at(s))) > kConditionTol)) return false;
    return true;
  };

  switch (tag) {
    case CaseTag::Case1General:
      rep.yong_zhou_applicable = false;
      rep.note =
          "no standard Riccati sub-equation in the general Case 1 coupling; "
          "only the computed interval is certified";
      break;
    case CaseTag::Case1Reduced:
      rep.yong_zhou_applicable = true;
      rep.yong_zhou_holds =
          pd_on_grid(game.cost2.R22) && psd_on_grid(game.cost2.Q) &&
          min_eigenvalue(game.cost2.L) >= -kConditionTol;
      rep.note = "conditions checked for the P2 equation: R222 >> 0, Q2 >= 0, L2 >= 0";
      break;
    case CaseTag::Case2:
      rep.yong_zhou_applicable = true;
      rep.yong_zhou_holds =
          pd_on_grid(game.cost1.R11) && psd_on_grid(game.cost1.Q) &&
          min_eigenvalue(game.cost1.L) >= -kConditionTol;
      rep.note = "conditions checked for the P1 equation: R111 >> 0, Q1 >= 0, L1 >= 0";
      break;
  }
  return rep;
}

void write_trajectory_csv(const RiccatiTrajectory& traj,
                          const std::string& path) {
  if (traj.grid.empty()) throw IoError("empty trajectory");
  const Eigen::Index n = traj.P1.front().rows();
  std::ostringstream os;
  os << "s";
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      os << ",P1_" << (i + 1) << (j + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      os << ",P2_" << (i + 1) << (j + 1);
  os << ",margin_follower,margin_leader\n";
  for (size_t k = 0; k < traj.grid.size(); ++k) {
    os << fmt17(traj.grid[k]);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        os << "," << fmt17(traj.P1[k](i, j));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        os << "," << fmt17(traj.P2[k](i, j));
    os << "," << fmt17(traj.margin_follower[k]) << ","
       << fmt17(traj.margin_leader[k]) << "\n";
  }
  atomic_write(path, os.str());
}

}  // namespace stackelberg
