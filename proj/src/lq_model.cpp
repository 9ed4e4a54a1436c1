#include "stackelberg/lq_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace stackelberg {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

double max_asymmetry(const MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

void check_shape(const Coeff& c, Eigen::Index rows, Eigen::Index cols,
                 const std::string& name) {
  if (c.empty()) return;
  if (c.rows() != rows || c.cols() != cols) {
    std::ostringstream os;
    os << name << " has shape " << c.rows() << "x" << c.cols() << ", expected "
       << rows << "x" << cols;
    throw DimensionMismatch(os.str());
  }
  if (c.is_table()) {
    const auto& ts = c.times();
    if (ts.empty()) throw DimensionMismatch(name + ": empty table");
    if (ts.size() != c.samples().size())
      throw DimensionMismatch(name + ": times/values length mismatch");
    for (size_t k = 1; k < ts.size(); ++k)
      if (!(ts[k - 1] < ts[k]))
        throw HorizonError(name + ": table times must be strictly increasing");
    for (double t : ts)
      if (!std::isfinite(t)) throw NonFiniteError(name + ": non-finite time");
    for (const auto& v : c.samples())
      if (!all_finite(v)) throw NonFiniteError(name + " has NaN/Inf entries");
  } else {
    if (!all_finite(c.constant()))
      throw NonFiniteError(name + " has NaN/Inf entries");
  }
}

// Resolves an empty coefficient to the zero matrix of the expected shape.
void fill_zero(Coeff& c, Eigen::Index rows, Eigen::Index cols) {
  if (c.empty()) c = Coeff(MatrixXd::Zero(rows, cols));
}

void apply(Coeff& c, const std::function<void(MatrixXd&)>& f) {
  if (c.is_table()) {
    for (auto& m : c.samples()) f(m);
  } else {
    f(c.constant());
  }
}

void symmetrize_checked(Coeff& c, const std::string& name) {
  apply(c, [&](MatrixXd& m) {
    double asym = max_asymmetry(m);
    if (asym > kSymmetryTol) {
      std::ostringstream os;
      os << name << " asymmetry " << asym << " exceeds " << kSymmetryTol;
      throw AsymmetryError(os.str());
    }
    m = ((m + m.transpose()) / 2.0).eval();
  });
}

void validate_cost(CostCoeffs& c, const Dims& d, const std::string& who) {
  check_shape(c.Q, d.n, d.n, who + ".Q");
  check_shape(c.M1, d.m1, d.n, who + ".M1");
  check_shape(c.M2, d.m2, d.n, who + ".M2");
  check_shape(c.R11, d.m1, d.m1, who + ".R11");
  check_shape(c.R12, d.m1, d.m2, who + ".R12");
  check_shape(c.R21, d.m2, d.m1, who + ".R21");
  check_shape(c.R22, d.m2, d.m2, who + ".R22");
  check_shape(c.q, d.n, 1, who + ".q");
  check_shape(c.rho1, d.m1, 1, who + ".rho1");
  check_shape(c.rho2, d.m2, 1, who + ".rho2");

  fill_zero(c.Q, d.n, d.n);
  fill_zero(c.M1, d.m1, d.n);
  fill_zero(c.M2, d.m2, d.n);
  fill_zero(c.R11, d.m1, d.m1);
  fill_zero(c.R22, d.m2, d.m2);
  fill_zero(c.q, d.n, 1);
  fill_zero(c.rho1, d.m1, 1);
  fill_zero(c.rho2, d.m2, 1);

  symmetrize_checked(c.Q, who + ".Q");
  symmetrize_checked(c.R11, who + ".R11");
  symmetrize_checked(c.R22, who + ".R22");

  // R12 = R21ᵀ as stored. If only one is given, derive the other.
  if (c.R12.empty() && c.R21.empty()) {
    fill_zero(c.R12, d.m1, d.m2);
    fill_zero(c.R21, d.m2, d.m1);
  } else if (c.R21.empty()) {
    if (c.R12.is_table()) {
      std::vector<MatrixXd> tr;
      for (const auto& m : c.R12.samples()) tr.push_back(m.transpose());
      c.R21 = Coeff(c.R12.times(), std::move(tr));
    } else {
      c.R21 = Coeff(c.R12.constant().transpose().eval());
    }
  } else if (c.R12.empty()) {
    if (c.R21.is_table()) {
      std::vector<MatrixXd> tr;
      for (const auto& m : c.R21.samples()) tr.push_back(m.transpose());
      c.R12 = Coeff(c.R21.times(), std::move(tr));
    } else {
      c.R12 = Coeff(c.R21.constant().transpose().eval());
    }
  } else {
    // Both present: require exact consistency.
    bool ok = c.R12.is_table() == c.R21.is_table();
    if (ok && c.R12.is_table()) {
      ok = c.R12.times() == c.R21.times() &&
           c.R12.samples().size() == c.R21.samples().size();
      if (ok)
        for (size_t k = 0; k < c.R12.samples().size(); ++k)
          ok = ok && c.R12.samples()[k] == c.R21.samples()[k].transpose();
    } else if (ok) {
      ok = c.R12.constant() == c.R21.constant().transpose();
    }
    if (!ok) throw AsymmetryError(who + ": R12 != R21^T");
  }

  if (c.L.size() == 0) c.L = MatrixXd::Zero(d.n, d.n);
  if (c.L.rows() != d.n || c.L.cols() != d.n)
    throw DimensionMismatch(who + ".L has wrong shape");
  if (!all_finite(c.L)) throw NonFiniteError(who + ".L has NaN/Inf entries");
  if (max_asymmetry(c.L) > kSymmetryTol)
    throw AsymmetryError(who + ".L is not symmetric");
  c.L = ((c.L + c.L.transpose()) / 2.0).eval();

  if (c.N.size() == 0) c.N = VectorXd::Zero(d.n);
  if (c.N.size() != d.n) throw DimensionMismatch(who + ".N has wrong length");
  if (!c.N.allFinite()) throw NonFiniteError(who + ".N has NaN/Inf entries");
}

}  // namespace

Coeff::Coeff(Eigen::MatrixXd constant)
    : is_table_(false), constant_(std::move(constant)) {}

Coeff::Coeff(std::vector<double> times, std::vector<Eigen::MatrixXd> samples)
    : is_table_(true), times_(std::move(times)), samples_(std::move(samples)) {
  if (samples_.empty()) throw DimensionMismatch("table coefficient with no samples");
}

Eigen::Index Coeff::rows() const {
  return is_table_ ? samples_.front().rows() : constant_.rows();
}

Eigen::Index Coeff::cols() const {
  return is_table_ ? samples_.front().cols() : constant_.cols();
}

Eigen::MatrixXd Coeff::at(double s) const {
  if (!is_table_) return constant_;
  if (s <= times_.front()) return samples_.front();
  if (s >= times_.back()) return samples_.back();
  auto it = std::upper_bound(times_.begin(), times_.end(), s);
  size_t hi = static_cast<size_t>(it - times_.begin());
  size_t lo = hi - 1;
  double w = (s - times_[lo]) / (times_[hi] - times_[lo]);
  return (1.0 - w) * samples_[lo] + w * samples_[hi];
}

GameSpec validate_game(const GameSpec& raw) {
  GameSpec g = raw;
  const Dims& d = g.dims;
  if (d.n < 1 || d.m1 < 1 || d.m2 < 1)
    throw DimensionMismatch("dims must satisfy n,m1,m2 >= 1");
  if (!std::isfinite(g.horizon.t0) || !std::isfinite(g.horizon.T))
    throw NonFiniteError("horizon endpoints must be finite");
  if (!(g.horizon.t0 < g.horizon.T))
    throw HorizonError("horizon requires t0 < T");

  check_shape(g.dynamics.A, d.n, d.n, "dynamics.A");
  check_shape(g.dynamics.B1, d.n, d.m1, "dynamics.B1");
  check_shape(g.dynamics.B2, d.n, d.m2, "dynamics.B2");
  check_shape(g.dynamics.C, d.n, d.n, "dynamics.C");
  check_shape(g.dynamics.D1, d.n, d.m1, "dynamics.D1");
  check_shape(g.dynamics.D2, d.n, d.m2, "dynamics.D2");
  check_shape(g.dynamics.b, d.n, 1, "dynamics.b");
  check_shape(g.dynamics.lambda, d.n, 1, "dynamics.lambda");
  fill_zero(g.dynamics.A, d.n, d.n);
  fill_zero(g.dynamics.B1, d.n, d.m1);
  fill_zero(g.dynamics.B2, d.n, d.m2);
  fill_zero(g.dynamics.C, d.n, d.n);
  fill_zero(g.dynamics.D1, d.n, d.m1);
  fill_zero(g.dynamics.D2, d.n, d.m2);
  fill_zero(g.dynamics.b, d.n, 1);
  fill_zero(g.dynamics.lambda, d.n, 1);

  validate_cost(g.cost1, d, "cost1");
  validate_cost(g.cost2, d, "cost2");
  return g;
}

namespace {

CostSnapshot cost_at(const CostCoeffs& c, double s) {
  CostSnapshot out;
  out.Q = c.Q.at(s);
  out.M1 = c.M1.at(s);
  out.M2 = c.M2.at(s);
  out.R11 = c.R11.at(s);
  out.R12 = c.R12.at(s);
  out.R21 = c.R21.at(s);
  out.R22 = c.R22.at(s);
  out.q = c.q.at(s);
  out.rho1 = c.rho1.at(s);
  out.rho2 = c.rho2.at(s);
  out.L = c.L;
  out.N = c.N;
  return out;
}

}  // namespace

CoefficientSnapshot snapshot(const GameSpec& game, double s) {
  if (!(s >= game.horizon.t0 && s <= game.horizon.T)) {
    std::ostringstream os;
    os << "time " << s << " outside horizon [" << game.horizon.t0 << ", "
       << game.horizon.T << "]";
    throw OutOfHorizon(os.str());
  }
  CoefficientSnapshot snap;
  snap.s = s;
  snap.dims = game.dims;
  snap.A = game.dynamics.A.at(s);
  snap.B1 = game.dynamics.B1.at(s);
  snap.B2 = game.dynamics.B2.at(s);
  snap.C = game.dynamics.C.at(s);
  snap.D1 = game.dynamics.D1.at(s);
  snap.D2 = game.dynamics.D2.at(s);
  snap.b = game.dynamics.b.at(s);
  snap.lambda = game.dynamics.lambda.at(s);
  snap.cost1 = cost_at(game.cost1, s);
  snap.cost2 = cost_at(game.cost2, s);
  return snap;
}

// ---------------------------------------------------------------------------
// JSON I/O

namespace {

using nlohmann::json;

MatrixXd parse_matrix(const json& j, const std::string& name) {
  if (j.is_number()) {
    MatrixXd m(1, 1);
    m(0, 0) = j.get<double>();
    return m;
  }
  if (!j.is_array() || j.empty())
    throw IoError(name + ": expected a number or non-empty array");
  if (j[0].is_number()) {
    // 1-D array -> column vector
    VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
  }
  size_t rows = j.size(), cols = j[0].size();
  MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw IoError(name + ": ragged matrix rows");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

Coeff parse_coeff(const json& j, const std::string& name) {
  if (j.is_object()) {
    if (!j.contains("times") || !j.contains("values"))
      throw IoError(name + ": table must have \"times\" and \"values\"");
    std::vector<double> times = j["times"].get<std::vector<double>>();
    std::vector<MatrixXd> values;
    for (size_t k = 0; k < j["values"].size(); ++k)
      values.push_back(parse_matrix(j["values"][k], name));
    return Coeff(std::move(times), std::move(values));
  }
  return Coeff(parse_matrix(j, name));
}

void parse_cost(const json& j, CostCoeffs& c, const std::string& who) {
  if (j.contains("Q")) c.Q = parse_coeff(j["Q"], who + ".Q");
  if (j.contains("M1")) c.M1 = parse_coeff(j["M1"], who + ".M1");
  if (j.contains("M2")) c.M2 = parse_coeff(j["M2"], who + ".M2");
  if (j.contains("R11")) c.R11 = parse_coeff(j["R11"], who + ".R11");
  if (j.contains("R12")) c.R12 = parse_coeff(j["R12"], who + ".R12");
  if (j.contains("R21")) c.R21 = parse_coeff(j["R21"], who + ".R21");
  if (j.contains("R22")) c.R22 = parse_coeff(j["R22"], who + ".R22");
  if (j.contains("q")) c.q = parse_coeff(j["q"], who + ".q");
  if (j.contains("rho1")) c.rho1 = parse_coeff(j["rho1"], who + ".rho1");
  if (j.contains("rho2")) c.rho2 = parse_coeff(j["rho2"], who + ".rho2");
  if (j.contains("L")) c.L = parse_matrix(j["L"], who + ".L");
  if (j.contains("N")) c.N = parse_matrix(j["N"], who + ".N");
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json coeff_to_json(const Coeff& c) {
  if (c.is_table()) {
    json v = json::array();
    for (const auto& m : c.samples()) v.push_back(matrix_to_json(m));
    return json{{"times", c.times()}, {"values", v}};
  }
  return matrix_to_json(c.constant());
}

void emit_cost(json& j, const CostCoeffs& c) {
  auto put = [&](const char* key, const Coeff& co) {
    if (!co.empty() && !(
            !co.is_table() && co.constant().isZero(0.0)))
      j[key] = coeff_to_json(co);
  };
  put("Q", c.Q);
  put("M1", c.M1);
  put("M2", c.M2);
  put("R11", c.R11);
  put("R12", c.R12);
  put("R21", c.R21);
  put("R22", c.R22);
  put("q", c.q);
  put("rho1", c.rho1);
  put("rho2", c.rho2);
  if (c.L.size() != 0 && !c.L.isZero(0.0)) j["L"] = matrix_to_json(c.L);
  if (c.N.size() != 0 && !c.N.isZero(0.0)) j["N"] = matrix_to_json(c.N);
}

}  // namespace

GameSpec load_game_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open game spec file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("malformed JSON in " + path + ": " + e.what());
  }
  GameSpec g;
  try {
    g.dims.n = j.at("dims").at("n").get<int>();
    g.dims.m1 = j.at("dims").at("m1").get<int>();
    g.dims.m2 = j.at("dims").at("m2").get<int>();
    g.horizon.t0 = j.at("horizon").at("t0").get<double>();
    g.horizon.T = j.at("horizon").at("T").get<double>();
    if (j.contains("dynamics")) {
      const json& d = j["dynamics"];
      if (d.contains("A")) g.dynamics.A = parse_coeff(d["A"], "dynamics.A");
      if (d.contains("B1")) g.dynamics.B1 = parse_coeff(d["B1"], "dynamics.B1");
      if (d.contains("B2")) g.dynamics.B2 = parse_coeff(d["B2"], "dynamics.B2");
      if (d.contains("C")) g.dynamics.C = parse_coeff(d["C"], "dynamics.C");
      if (d.contains("D1")) g.dynamics.D1 = parse_coeff(d["D1"], "dynamics.D1");
      if (d.contains("D2")) g.dynamics.D2 = parse_coeff(d["D2"], "dynamics.D2");
      if (d.contains("b")) g.dynamics.b = parse_coeff(d["b"], "dynamics.b");
      if (d.contains("lambda"))
        g.dynamics.lambda = parse_coeff(d["lambda"], "dynamics.lambda");
    }
    if (j.contains("cost1")) parse_cost(j["cost1"], g.cost1, "cost1");
    if (j.contains("cost2")) parse_cost(j["cost2"], g.cost2, "cost2");
  } catch (const json::exception& e) {
    throw IoError("bad game spec schema in " + path + ": " + e.what());
  }
  return validate_game(g);
}

std::string game_spec_to_json(const GameSpec& game) {
  json j;
  j["dims"] = {{"n", game.dims.n}, {"m1", game.dims.m1}, {"m2", game.dims.m2}};
  j["horizon"] = {{"t0", game.horizon.t0}, {"T", game.horizon.T}};
  json dyn = json::object();
  auto put = [&](const char* key, const Coeff& co) {
    if (!co.empty() && !(!co.is_table() && co.constant().isZero(0.0)))
      dyn[key] = coeff_to_json(co);
  };
  put("A", game.dynamics.A);
  put("B1", game.dynamics.B1);
  put("B2", game.dynamics.B2);
  put("C", game.dynamics.C);
  put("D1", game.dynamics.D1);
  put("D2", game.dynamics.D2);
  put("b", game.dynamics.b);
  put("lambda", game.dynamics.lambda);
  j["dynamics"] = dyn;
  json c1 = json::object(), c2 = json::object();
  emit_cost(c1, game.cost1);
  emit_cost(c2, game.cost2);
  j["cost1"] = c1;
  j["cost2"] = c2;
  return j.dump(2) + "\n";
}

}  // namespace stackelberg
