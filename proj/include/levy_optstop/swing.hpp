#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "levy_optstop/levy.hpp"
#include "levy_optstop/pricing.hpp"

namespace levy_optstop {

struct Refraction {
  enum class Kind { Deterministic, Exponential };
  Kind kind = Kind::Deterministic;
  double parameter = 0.5;  // length, or rate of the exponential

  static Refraction deterministic(double d) { return {Kind::Deterministic, d}; }
  static Refraction exponential(double rate) { return {Kind::Exponential, rate}; }

  void validate(double q) const;
  double sample(std::mt19937_64& rng) const;
};

// Uniform grid in log-price.
struct LogGrid {
  double min = 0.0;
  double max = 0.0;
  int points = 0;

  // [log K - 6.5, log K + 3.5]: the required window plus a margin
  static LogGrid covering(double log_strike, int points = 701);
  double step() const { return (max - min) / (points - 1); }
  double node(int i) const { return i == points - 1 ? max : min + step() * i; }
  std::vector<double> nodes() const;
};

struct SwingSpec {
  int n_rights = 1;
  Refraction refraction;
  std::optional<LogGrid> grid;  // default LogGrid::covering(log K)
  std::int64_t mc_paths = 10000;
  std::uint64_t seed = 20240601;
  int batches = 8;  // independent sub-ladders for standard errors

  void validate(const OptionSpec& option) const;
  LogGrid resolved_grid(const OptionSpec& option) const;
};

// g(x) = weight (K - e^x)^+ + h(x), with h piecewise linear on the grid.
// Below the grid h continues log-linearly, above it flat.
struct PayoffCurve {
  LogGrid grid;
  std::vector<double> extra;     // h on the nodes
  std::vector<double> extra_se;  // Monte Carlo error of h
  double intrinsic_weight = 1.0;
  double escape_fraction = 0.0;  // samples from [log K - 6, log K + 3] that left the grid
  bool escape_warning = false;
};

// Linear interpolation on the grid with the same extension rules as
// PayoffCurve.
double interpolate_curve(const LogGrid& grid, const std::vector<double>& values, double x);

// v(x, l, u) = E_x[e^{-q tau} g(X_tau)] for the first entrance time of
// [l, u]; l may be kNoLower.
class CurveValuer {
 public:
  CurveValuer(const LevyModel& model, const OptionSpec& option, const PayoffCurve& payoff);

  const EntranceKernel& kernel() const { return kernel_; }
  double payoff(double x) const;
  double value(double l, double u, double x) const;

 private:
  double extra(double x) const;
  // int^x h(t) e^{c (t - ref)} dt up to a constant
  double cumulative(double x) const;
  double jump_weight(double l, double u) const;

  EntranceKernel kernel_;
  PayoffCurve curve_;
  double strike_;
  double c_ = 0.0;
  double ref_ = 0.0;
  std::vector<double> cum_;
};

struct LevelSolution {
  Regime regime = Regime::NoEarlyExercise;
  std::optional<double> l_star;
  std::optional<double> u_star;
  std::vector<double> value;  // on the grid
  int iterations = 0;
  bool edge_optimum = false;  // supremum only approached at the search box edge
};

// Level-k payoff g^(k) = g + E[e^{-q delta} V^(k-1)(x + X_delta)], with common
// random numbers across nodes. previous is empty for k = 1.
PayoffCurve refraction_payoff(const LevyModel& model, const OptionSpec& option,
                              const SwingSpec& spec, int level,
                              const std::vector<double>& previous);

PayoffCurve refraction_payoff_on(const LevyModel& model, const OptionSpec& option,
                                 const SwingSpec& spec, int level,
                                 const std::vector<double>& previous,
                                 std::int64_t first_path, std::int64_t paths);

LevelSolution solve_level(const LevyModel& model, const OptionSpec& option,
                          const PayoffCurve& payoff);

struct SwingLevel {
  int k = 0;
  PayoffCurve payoff;
  LevelSolution solution;
  std::vector<double> value_se;  // batch standard error of V^(k) on the grid
  double se_l = 0.0;
  double se_u = 0.0;
};

struct SwingResult {
  LevyModel model;
  OptionSpec option;
  LogGrid grid;
  Regime regime = Regime::NoEarlyExercise;
  std::vector<SwingLevel> levels;

  // V^(k)(s) from the entrance formula at the level's optimal interval.
  double value(int k, double s) const;
};

SwingResult solve_swing(const LevyModel& model, const OptionSpec& option,
                        const SwingSpec& spec);

}  // namespace levy_optstop
