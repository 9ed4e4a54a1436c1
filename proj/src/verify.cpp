#include "stackelberg/verify.hpp"

#include <cmath>
#include <sstream>

#include "stackelberg/csv_io.hpp"
#include "stackelberg/errors.hpp"

namespace stackelberg {

namespace {

const char* target_name(PerturbationFamily::Target t) {
  return t == PerturbationFamily::Target::Leader ? "leader" : "follower";
}

const char* kind_name(PerturbationFamily::Kind k) {
  return k == PerturbationFamily::Kind::GainOffset ? "gain_offset"
                                                   : "constant_offset";
}

}  // namespace

PerturbationFamily default_family(PerturbationFamily::Target target,
                                  PerturbationFamily::Kind kind, int m,
                                  int n) {
  PerturbationFamily f;
  f.target = target;
  f.kind = kind;
  f.magnitudes = {0.0, 0.05, -0.05, 0.1, -0.1, 0.2, -0.2};
  f.direction = Eigen::MatrixXd::Ones(m, n);
  f.direction /= f.direction.norm();
  f.direction_vec = Eigen::VectorXd::Ones(m);
  f.direction_vec /= f.direction_vec.norm();
  return f;
}

FeedbackStrategy perturb(const FeedbackStrategy& strategy,
                         const PerturbationFamily& family, double eps) {
  FeedbackStrategy out = strategy;
  if (eps == 0.0) return out;
  if (family.kind == PerturbationFamily::Kind::GainOffset) {
    if (strategy.Kx.empty() ||
        family.direction.rows() != strategy.Kx.front().rows() ||
        family.direction.cols() != strategy.Kx.front().cols())
      throw DimensionMismatch("perturb: gain direction shape mismatch");
    for (auto& K : out.Kx) K += eps * family.direction;
  } else {
    if (strategy.offset.empty() ||
        family.direction_vec.size() != strategy.offset.front().size())
      throw DimensionMismatch("perturb: offset direction shape mismatch");
    for (auto& o : out.offset) o += eps * family.direction_vec;
  }
  return out;
}

VerificationReport stackelberg_inequality_test(
    const GameSpec& game, const FeedbackStrategy& leader,
    const FeedbackStrategy& follower, const PerturbationFamily& family,
    const SimConfig& cfg) {
  SimulationResult base = simulate(game, leader, follower, cfg);
  bool target_leader = family.target == PerturbationFamily::Target::Leader;
  const std::vector<double>& base_J =
      target_leader ? base.J1_paths : base.J2_paths;

  VerificationReport report;
  report.target = family.target;
  report.kind = family.kind;
  report.all_pass = true;
  const auto count = base_J.size();
  std::vector<double> diff(count), dev(count);
  for (double eps : family.magnitudes) {
    SimulationResult pert;
    if (target_leader) {
      pert = simulate(game, perturb(leader, family, eps), follower, cfg);
    } else {
      pert = simulate(game, leader, perturb(follower, family, eps), cfg);
    }
    const std::vector<double>& pert_J =
        target_leader ? pert.J1_paths : pert.J2_paths;
    for (std::size_t p = 0; p < count; ++p) diff[p] = pert_J[p] - base_J[p];
    VerificationCell cell;
    cell.eps = eps;
    cell.deltaJ =
        pairwise_sum(diff.data(), count) / static_cast<double>(count);
    if (count > 1) {
      for (std::size_t p = 0; p < count; ++p) {
        double d = diff[p] - cell.deltaJ;
        dev[p] = d * d;
      }
      cell.stderr_ = std::sqrt(pairwise_sum(dev.data(), count) /
                               (static_cast<double>(count - 1) * count));
    }
    cell.pass = cell.deltaJ >=
                -3.0 * cell.stderr_ - kBiasAllowance * (1.0 + std::abs(cell.deltaJ));
    report.all_pass = report.all_pass && cell.pass;
    report.cells.push_back(cell);
  }
  return report;
}

CurvatureFit curvature_check(const VerificationReport& report) {
  const auto& cells = report.cells;
  if (cells.size() < 5)
    throw InsufficientData("curvature_check: need at least 5 magnitudes");
  bool has_zero = false;
  for (const auto& c : cells) has_zero = has_zero || c.eps == 0.0;
  if (!has_zero)
    throw InsufficientData("curvature_check: magnitudes must include 0");
  for (const auto& c : cells) {
    if (c.eps == 0.0) continue;
    bool mirrored = false;
    for (const auto& d : cells)
      mirrored = mirrored || std::abs(d.eps + c.eps) < 1e-15;
    if (!mirrored)
      throw InsufficientData(
          "curvature_check: magnitudes must be symmetric about 0");
  }
  double num = 0.0, den = 0.0;
  for (const auto& c : cells) {
    double e2 = c.eps * c.eps;
    num += e2 * c.deltaJ;
    den += e2 * e2;
  }
  CurvatureFit fit;
  fit.c = den > 0.0 ? num / den : 0.0;
  double ss = 0.0;
  for (const auto& c : cells) {
    double r = c.deltaJ - fit.c * c.eps * c.eps;
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(cells.size()));
  return fit;
}

void write_verification_csv(const std::vector<VerificationReport>& reports,
                            const std::string& path) {
  std::ostringstream out;
  out << "target,kind,eps,deltaJ,stderr,pass\n";
  for (const auto& rep : reports) {
    for (const auto& cell : rep.cells) {
      out << target_name(rep.target) << "," << kind_name(rep.kind) << ","
          << fmt17(cell.eps) << "," << fmt17(cell.deltaJ) << ","
          << fmt17(cell.stderr_) << "," << (cell.pass ? 1 : 0) << "\n";
    }
  }
  atomic_write(path, out.str());
}

std::string verification_summary(const VerificationReport& report) {
  std::ostringstream out;
  out << "inequality check (" << target_name(report.target) << ", "
      << kind_name(report.kind)
      << "): sampled deviations, not a proof over all admissible strategies\n";
  for (const auto& cell : report.cells) {
    out << "  eps=" << cell.eps << "  deltaJ=" << cell.deltaJ
        << "  stderr=" << cell.stderr_ << "  "
        << (cell.pass ? "pass" : "FAIL") << "\n";
  }
  out << (report.all_pass ? "  all pass\n" : "  FAILURES present\n");
  return out.str();
}

}  // namespace stackelberg
