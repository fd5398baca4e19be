#pragma once

#include <cmath>

#include "levy_optstop/levy.hpp"
#include "support/oracles.hpp"

namespace fixtures {

using levy_optstop::JumpSign;
using levy_optstop::LevyModel;

// Black-Scholes with sigma = 0.2, delta = -0.06 under the martingale drift
// for q = -0.01; strike 1.2.
inline constexpr double kSigma = 0.2;
inline constexpr double kDeltaBs = -0.06;
inline constexpr double kQNeg = -0.01;
inline constexpr double kQPos = 0.01;
inline constexpr double kStrike = 1.2;

inline LevyModel bs_base() { return LevyModel::black_scholes(0.03, kSigma); }
inline LevyModel bs_base_qpos() { return LevyModel::black_scholes(0.05, kSigma); }

// Jump-diffusion with sigma = 0.2, lambda = 0.2, rho = 7.5, mu = 0.06.
inline LevyModel jd_base(JumpSign s = JumpSign::SpectrallyNegative) {
  return LevyModel::exp_jump_diffusion(0.06, kSigma, 0.2, 7.5, s);
}

inline oracle::JdParams jd_params() { return {0.06, kSigma, 0.2, 7.5}; }

}  // namespace fixtures
