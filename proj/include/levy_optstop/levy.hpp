#pragma once

#include <optional>
#include <vector>

namespace levy_optstop {

enum class Family { BlackScholes, ExpJumpDiffusion };
enum class JumpSign { SpectrallyNegative, SpectrallyPositive };

// Log-price model X_t = mu t + sigma W_t -/+ compound Poisson with Exp(rho)
// jump sizes. Construct through the factories, which validate and canonicalize.
struct LevyModel {
  Family family = Family::BlackScholes;
  double mu = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  double rho = 1.0;
  JumpSign jump_sign = JumpSign::SpectrallyNegative;

  static LevyModel black_scholes(double mu, double sigma);
  static LevyModel exp_jump_diffusion(double mu, double sigma, double lambda,
                                      double rho,
                                      JumpSign sign = JumpSign::SpectrallyNegative);

  void validate() const;
  bool has_jumps() const { return family == Family::ExpJumpDiffusion; }
  bool spectrally_negative() const {
    return jump_sign == JumpSign::SpectrallyNegative;
  }
  // -X, with the jump orientation flipped.
  LevyModel reflected() const;
};

// Spectrally negative model whose scale function enters the fluctuation
// identities: the model itself, or -X for a spectrally positive model.
LevyModel scale_driver(const LevyModel& model);

struct RootSet {
  std::optional<double> phi_q;
  std::vector<double> negative_roots;  // remaining real roots, descending
  bool all_real = false;
};

double implied_drift(Family family, double sigma, double lambda, double rho,
                     double q, double delta,
                     JumpSign sign = JumpSign::SpectrallyNegative);

double laplace_exponent(const LevyModel& model, double phi);
double laplace_exponent_derivative(const LevyModel& model, double phi);

// Both operate on scale_driver(model): for a spectrally positive model the
// roots and the right inverse are those of the reflected process.
std::optional<double> phi_right_inverse(const LevyModel& model, double q);
RootSet psi_equation_roots(const LevyModel& model, double q);

// E[X_1] of the model in its own orientation.
double mean_increment(const LevyModel& model);

}  // namespace levy_optstop
