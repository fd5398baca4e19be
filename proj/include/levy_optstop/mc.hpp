#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "levy_optstop/levy.hpp"

namespace levy_optstop {

struct McConfig {
  std::int64_t paths = 100000;
  double dt = 1e-3;        // finest bridge resolution
  double horizon = 1e5;    // hard cap on simulated time
  std::uint64_t seed = 20240601;
  std::uint64_t stream = 0;  // separates independent uses of one seed
  bool change_of_measure = true;
  // a path stops once the bound on its remaining contribution falls below
  // this fraction of the bound at the start
  double kill_tolerance = 1e-6;

  void validate() const;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double truncated_fraction = 0.0;
  double truncation_bound = 0.0;
  bool bias_warning = false;
  double tilt = 0.0;
  std::int64_t paths = 0;
};

// Reproducible per-path generator keyed by (seed, stream, path).
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t path);

double simulate_increment(const LevyModel& model, double dt, std::mt19937_64& rng);

using Payoff = std::function<double(double)>;
Payoff put_payoff(double strike);
Payoff call_payoff(double strike);

// E_x[e^{-q tau} g(X_tau)] for tau the first entrance time of [l, u].
McEstimate mc_entrance_value(const LevyModel& model, double l, double u, double x,
                             const Payoff& payoff, double q, const McConfig& config);

// E_x[int_0^{tau_0^-} e^{-q t} 1{a <= X_t <= b} dt], the resolvent of X killed
// below zero integrated over [a, b].
McEstimate mc_occupation(const LevyModel& model, double q, double x, double a, double b,
                         const McConfig& config);

// Sample mean of e^{X_T - psi(1) T}.
McEstimate mc_martingale_check(const LevyModel& model, double horizon, const McConfig& config);

// Mean and standard error of per-path values, summed pairwise in index order.
McEstimate summarize(const std::vector<double>& values);

// Runs body(i) for i in [0, n) on up to LEVY_OPTSTOP_THREADS workers.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);
int worker_threads();

}  // namespace levy_optstop
