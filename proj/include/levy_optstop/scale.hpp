#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "levy_optstop/levy.hpp"

namespace levy_optstop {

struct ScaleEval {
  double w = 0.0;
  double w_prime = 0.0;
  double w_double_prime = 0.0;
};

// W^(q) for the spectrally negative driver of a model, as a sum of
// exponentials over the roots of psi = q. Nearly equal roots are merged
// into their confluent (polynomial times exponential) limit.
class ScaleFunction {
 public:
  ScaleFunction(const LevyModel& model, double q);

  const LevyModel& driver() const { return driver_; }
  double q() const { return q_; }
  double phi() const { return phi_; }
  const std::vector<double>& roots() const { return roots_; }

  ScaleEval eval(double x) const;

  // sum_i f(theta_i) / psi'(theta_i); f must accept double and
  // std::complex<double> (the latter is used for confluent roots).
  template <class F>
  double apply(F&& f) const;

 private:
  template <class T>
  T weight(const T& t, std::size_t a, std::size_t b) const;

  LevyModel driver_;
  double q_;
  double phi_;
  std::vector<double> roots_;               // descending, roots_[0] = phi
  std::vector<std::pair<std::size_t, std::size_t>> groups_;  // a == b: simple
};

ScaleEval scale_eval(const LevyModel& model, double q, double x);
double resolvent_density(const LevyModel& model, double q, double x, double z);
double laplace_identity_residual(const LevyModel& model, double q, double phi);

// N(t) / (k prod over roots outside the group (t - theta_j)), where
// (psi(t) - q) = k prod (t - theta_j) / N(t) and N = t + rho or 1.
template <class T>
T ScaleFunction::weight(const T& t, std::size_t a, std::size_t b) const {
  const double k = 0.5 * driver_.sigma * driver_.sigma;
  T num = driver_.has_jumps() ? t + driver_.rho : T(1.0);
  T den = T(k);
  for (std::size_t j = 0; j < roots_.size(); ++j) {
    if (j == a || j == b) continue;
    den *= t - roots_[j];
  }
  return num / den;
}

template <class F>
double ScaleFunction::apply(F&& f) const {
  double total = 0.0;
  for (const auto& [a, b] : groups_) {
    if (a == b) {
      total += f(roots_[a]) * weight(roots_[a], a, b);
      continue;
    }
    // d/dt [f w](t) at the merged root, by complex step.
    const double m = 0.5 * (roots_[a] + roots_[b]);
    const double h = 1e-20 * std::max(1.0, std::abs(m));
    const std::complex<double> t(m, h);
    total += std::imag(f(t) * weight(t, a, b)) / h;
  }
  return total;
}

}  // namespace levy_optstop
