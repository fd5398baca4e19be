#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "levy_optstop/levy.hpp"
#include "levy_optstop/scale.hpp"

namespace levy_optstop {

enum class OptionKind { Put, Call };

struct OptionSpec {
  OptionKind kind = OptionKind::Put;
  double strike = 1.0;
  double q = 0.0;
  double delta = 0.0;
  double spot = 1.0;

  void validate() const;
  double log_strike() const;
  double intrinsic(double s) const;
};

enum class Regime { NoEarlyExercise, SingleHalfLine, DoubleRegion, DegeneratePoint };

std::string_view regime_label(Regime r);

struct ContinuationRegion {
  Regime regime = Regime::NoEarlyExercise;
  std::optional<double> l_star;
  std::optional<double> u_star;
};

struct ValuationResult {
  std::optional<double> price;  // absent when no entrance rule attains the value
  ContinuationRegion region;
  std::optional<double> phi_q;
  std::optional<double> smooth_fit_residual_l;
  std::optional<double> smooth_fit_residual_u;
  std::map<std::string, double> diagnostics;
};

// Pieces of the entrance-time identities shared by every payoff: the scale
// function of the driver, the creeping term (sigma^2/2)(W' - Phi W) and the
// exponential-jump resolvent integral
//   J(y) = lambda rho int_0^inf r(y, z) e^{-rho z} dz.
// Distances y are measured away from the boundary on the jump side.
class EntranceKernel {
 public:
  EntranceKernel(const LevyModel& model, double q);

  const LevyModel& model() const { return model_; }
  const ScaleFunction& scale() const { return scale_; }
  double phi() const { return scale_.phi(); }
  double q() const { return scale_.q(); }
  // Continuous passage happens into l from below (downward jumps) or into u
  // from above (upward jumps).
  bool continuous_side_below() const { return model_.spectrally_negative(); }

  double creep(double y) const;
  double creep_prime(double y) const;
  double jump(double y) const;
  double jump_prime(double y) const;

 private:
  LevyModel model_;
  ScaleFunction scale_;
};

inline constexpr double kNoLower = -std::numeric_limits<double>::infinity();

// v(x, l, u) for the put payoff (K - e^x); l may be kNoLower.
class PutValuer {
 public:
  PutValuer(const LevyModel& model, const OptionSpec& spec);

  const EntranceKernel& kernel() const { return kernel_; }
  double strike() const { return strike_; }

  double value(double l, double u, double x) const;
  // One-sided x-derivatives of v at x; differ only at x = l or x = u.
  std::pair<double, double> derivative(double l, double u, double x) const;

 private:
  double jump_weight(double l, double u) const;
  double outside_derivative(double l, double u, double x, bool below) const;

  EntranceKernel kernel_;
  double strike_;
};

double put_entrance_value(const LevyModel& model, const OptionSpec& spec,
                          double l, double u, double x);

Regime classify_region(const LevyModel& model, const OptionSpec& spec);

struct OptimizerOptions {
  bool force_numeric = false;  // bypass Black-Scholes closed forms
  std::optional<double> probe_lo;  // grid-stage probes; refinement re-centres
  std::optional<double> probe_hi;
  int grid_points = 200;
  int max_iterations = 10000;
};

struct OptimizerReport {
  ContinuationRegion region;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool multimodal = false;
  bool closed_form = false;
};

OptimizerReport optimize_put_boundaries_report(const LevyModel& model,
                                               const OptionSpec& spec,
                                               const OptimizerOptions& opts = {});
ContinuationRegion optimize_put_boundaries(const LevyModel& model,
                                           const OptionSpec& spec);

ValuationResult price_put(const LevyModel& model, const OptionSpec& spec);

std::pair<double, double> smooth_fit_residual(const LevyModel& model,
                                              const OptionSpec& spec,
                                              const ContinuationRegion& region);

// Value gaps |v(b-) - v(b+)| at both boundaries.
std::pair<double, double> continuous_fit_gap(const LevyModel& model,
                                             const OptionSpec& spec,
                                             const ContinuationRegion& region);

}  // namespace levy_optstop
