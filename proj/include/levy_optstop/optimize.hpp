#pragma once

#include <functional>
#include <optional>

namespace levy_optstop {

struct SimplexResult {
  double x0 = 0.0;
  double x1 = 0.0;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Maximise f over R^2 with GSL's nmsimplex2, stopping when the simplex size
// drops below size_tol.
SimplexResult nelder_mead_max(const std::function<double(double, double)>& f,
                              double x0, double x1, double step, double size_tol,
                              int max_iter);

struct LineResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Maximise f on [lo, hi]; Brent when (lo, guess, hi) brackets a maximum,
// golden section otherwise.
LineResult line_max(const std::function<double(double)>& f, double lo,
                    double guess, double hi, double tol, int max_iter);

// Root of f in [a, b] by GSL's Brent solver; empty without a sign change.
std::optional<double> bracketed_root(const std::function<double(double)>& f, double a,
                                     double b, double tol, int max_iter);

}  // namespace levy_optstop
