#pragma once

#include "stackelberg/lq_model.hpp"

namespace stackelberg {

// Scalar two-player benchmark with state-dependent noise and a weakly coupled
// follower channel (B2 = R_{2,uv} = 0.001). Solvable in the general coupled
// Riccati form; ships as the `example` subcommand's built-in spec.
GameSpec make_coupled_benchmark_game();

// Scalar leader-only benchmark: A=0, B1=1, Q1=R1,uu=1, L1=0 on [0,1], so the
// leader kernel is P1(s) = tanh(T−s) in closed form and the follower's
// equilibrium control is identically zero. R2,vv = 1 keeps the follower's
// stationarity condition well posed without affecting P1 or the gains.
GameSpec make_tanh_benchmark_game();

}  // namespace stackelberg
