#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "stackelberg/equilibrium.hpp"
#include "stackelberg/lq_model.hpp"

namespace stackelberg {

struct SimConfig {
  long long n_paths = 10000;
  long long n_steps = 1000;
  std::uint64_t seed = 42;
  Eigen::VectorXd initial_state;           // n-vector
  double start_time = std::numeric_limits<double>::quiet_NaN();  // NaN → t0
  std::vector<long long> dump_paths;       // path ids to record
  std::string dump_file;                   // CSV target when dump_paths set
};

struct SimulationResult {
  double J1_mean = 0.0, J1_stderr = 0.0;
  double J2_mean = 0.0, J2_stderr = 0.0;
  Eigen::VectorXd terminal_state_mean;
  // Per-path realized costs, retained so callers can form common-random-number
  // differences path by path.
  std::vector<double> J1_paths, J2_paths;
};

// Euler–Maruyama on x_{k+1} = x_k + f(s_k,x_k)h + σ(s_k,x_k)√h ξ_k with the
// closed-loop controls u_k = leader(s_k,x_k), v_k = follower(s_k,x_k,u_k) and
// ξ_k ~ N(0,1) drawn from the counter generator keyed by (seed,path,step).
// Running costs use left-endpoint quadrature; means and standard errors use
// pairwise tree reduction, so results are bitwise reproducible.
SimulationResult simulate(const GameSpec& game, const FeedbackStrategy& leader,
                          const FeedbackStrategy& follower,
                          const SimConfig& cfg);

struct ValueGapReport {
  double gap1 = 0.0, gap2 = 0.0;       // J_i_MC − ½x0ᵀP_i(t0)x0
  double stderr1 = 0.0, stderr2 = 0.0;
  double value1 = 0.0, value2 = 0.0;   // the quadratic values
};

// Monte-Carlo cost under the equilibrium pair minus the quadratic value of the
// Riccati solution at the initial point.
ValueGapReport estimate_value_gap(const GameSpec& game,
                                  const RiccatiTrajectory& traj,
                                  const FeedbackStrategy& leader,
                                  const FeedbackStrategy& follower,
                                  const SimConfig& cfg);

// Deterministic summation order used for all Monte-Carlo averages.
double pairwise_sum(const double* v, std::size_t count);

}  // namespace stackelberg
