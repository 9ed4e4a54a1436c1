#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stackelberg/errors.hpp"

namespace stackelberg {

struct Dims {
  int n = 0;   // state dimension
  int m1 = 0;  // leader control dimension
  int m2 = 0;  // follower control dimension
};

struct Horizon {
  double t0 = 0.0;
  double T = 1.0;
};

// A matrix-valued deterministic function of time: either a constant matrix or
// a piecewise-linear table over [t0, T]. An empty Coeff stands for the zero
// matrix; validate_game resolves its shape.
class Coeff {
 public:
  Coeff() = default;
  explicit Coeff(Eigen::MatrixXd constant);
  Coeff(std::vector<double> times, std::vector<Eigen::MatrixXd> samples);

  bool empty() const { return !is_table_ && constant_.size() == 0; }
  bool is_table() const { return is_table_; }
  Eigen::Index rows() const;
  Eigen::Index cols() const;

  // Value at time s. Tables interpolate linearly between samples and clamp
  // outside the sampled range.
  Eigen::MatrixXd at(double s) const;

  const Eigen::MatrixXd& constant() const { return constant_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Eigen::MatrixXd>& samples() const { return samples_; }
  std::vector<Eigen::MatrixXd>& samples() { return samples_; }
  Eigen::MatrixXd& constant() { return constant_; }

 private:
  bool is_table_ = false;
  Eigen::MatrixXd constant_;
  std::vector<double> times_;
  std::vector<Eigen::MatrixXd> samples_;
};

struct DynamicsCoeffs {
  Coeff A, B1, B2, C, D1, D2;  // n×n, n×m1, n×m2, n×n, n×m1, n×m2
  Coeff b, lambda;             // n-vectors
};

// Cost weights for one player. Field names follow the block-matrix layout of
// the running cost: Q (state), M1/M2 (control-state cross), R11/R12/R21/R22
// (control blocks), q/rho1/rho2 (linear), L/N (terminal, constant).
struct CostCoeffs {
  Coeff Q, M1, M2, R11, R12, R21, R22;
  Coeff q, rho1, rho2;
  Eigen::MatrixXd L;  // n×n symmetric
  Eigen::VectorXd N;  // n-vector
};

struct GameSpec {
  Dims dims;
  Horizon horizon;
  DynamicsCoeffs dynamics;
  CostCoeffs cost1, cost2;
};

struct CostSnapshot {
  Eigen::MatrixXd Q, M1, M2, R11, R12, R21, R22;
  Eigen::VectorXd q, rho1, rho2;
  Eigen::MatrixXd L;
  Eigen::VectorXd N;
};

// All coefficients evaluated at one time s.
struct CoefficientSnapshot {
  double s = 0.0;
  Dims dims;
  Eigen::MatrixXd A, B1, B2, C, D1, D2;
  Eigen::VectorXd b, lambda;
  CostSnapshot cost1, cost2;
};

// Tolerance below which an asymmetric input is silently symmetrized.
inline constexpr double kSymmetryTol = 1e-12;

// Checks dimensions, finiteness, horizon ordering, and the symmetry
// requirements on Q, R11, R22, L (tolerance 1e-12, then exact (X+Xᵀ)/2).
// R12 must equal R21ᵀ as stored; if only one of the pair is given the other
// is filled in. Missing coefficients become zero matrices.
GameSpec validate_game(const GameSpec& raw);

// Evaluates every coefficient at time s ∈ [t0, T]. Throws OutOfHorizon.
CoefficientSnapshot snapshot(const GameSpec& game, double s);

// JSON game-spec file I/O (schema: dims / horizon / dynamics / cost1 / cost2,
// coefficients as row-major 2-D arrays or {"times": [...], "values": [...]}).
GameSpec load_game_spec(const std::string& path);  // validated
std::string game_spec_to_json(const GameSpec& game);

}  // namespace stackelberg
