#include "stackelberg/benchmarks.hpp"

namespace stackelberg {

namespace {

Eigen::MatrixXd s1(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace

GameSpec make_coupled_benchmark_game() {
  GameSpec g;
  g.dims = {1, 1, 1};
  g.horizon = {0.0, 1.0};
  g.dynamics.A = Coeff(s1(1.0));
  g.dynamics.B1 = Coeff(s1(1.0));
  g.dynamics.B2 = Coeff(s1(0.001));
  g.dynamics.C = Coeff(s1(1.0));
  g.cost1.Q = Coeff(s1(1.0));
  g.cost1.R11 = Coeff(s1(1.0));
  g.cost1.R12 = Coeff(s1(1.0));
  g.cost1.L = s1(1.0);
  g.cost2.Q = Coeff(s1(1.0));
  g.cost2.R12 = Coeff(s1(0.001));
  g.cost2.R22 = Coeff(s1(1.0));
  g.cost2.L = s1(2.0);
  return validate_game(g);
}

GameSpec make_tanh_benchmark_game() {
  GameSpec g;
  g.dims = {1, 1, 1};
  g.horizon = {0.0, 1.0};
  g.dynamics.B1 = Coeff(s1(1.0));
  g.cost1.Q = Coeff(s1(1.0));
  g.cost1.R11 = Coeff(s1(1.0));
  g.cost2.R22 = Coeff(s1(1.0));
  return validate_game(g);
}

}  // namespace stackelberg
