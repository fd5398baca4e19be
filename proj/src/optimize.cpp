#include "levy_optstop/optimize.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_min.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_roots.h>

#include <cmath>
#include <mutex>

namespace levy_optstop {

namespace {

void quiet_gsl() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

LineResult golden_max(const std::function<double(double)>& f, double a, double b,
                      double tol, int max_iter) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  LineResult r;
  for (; r.iterations < max_iter && b - a > tol; ++r.iterations) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  r.converged = b - a <= tol;
  r.x = 0.5 * (a + b);
  r.value = f(r.x);
  return r;
}

}  // namespace

SimplexResult nelder_mead_max(const std::function<double(double, double)>& f,
                              double x0, double x1, double step, double size_tol,
                              int max_iter) {
  quiet_gsl();
  gsl_multimin_function fn;
  fn.n = 2;
  fn.f = [](const gsl_vector* v, void* p) {
    const auto& g = *static_cast<const std::function<double(double, double)>*>(p);
    return -g(gsl_vector_get(v, 0), gsl_vector_get(v, 1));
  };
  fn.params = const_cast<std::function<double(double, double)>*>(&f);
  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* ss = gsl_vector_alloc(2);
  gsl_vector_set(x, 0, x0);
  gsl_vector_set(x, 1, x1);
  gsl_vector_set_all(ss, step);
  gsl_multimin_fminimizer* s =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_multimin_fminimizer_set(s, &fn, x, ss);
  SimplexResult r;
  double best = s->fval;
  int stale = 0;
  while (r.iterations < max_iter) {
    ++r.iterations;
    const int status = gsl_multimin_fminimizer_iterate(s);
    const double size = gsl_multimin_fminimizer_size(s);
    if (status != GSL_SUCCESS) {
      // no further progress possible in floating point
      r.converged = size < 1e4 * size_tol;
      break;
    }
    if (gsl_multimin_test_size(size, size_tol) == GSL_SUCCESS) {
      r.converged = true;
      break;
    }
    // below the rounding floor of f the simplex wanders without improving
    if (s->fval < best) {
      best = s->fval;
      stale = 0;
    } else if (++stale > 500 && size < 1e3 * size_tol) {
      r.converged = true;
      break;
    }
  }
  r.x0 = gsl_vector_get(s->x, 0);
  r.x1 = gsl_vector_get(s->x, 1);
  r.value = -s->fval;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(ss);
  gsl_vector_free(x);
  return r;
}

LineResult line_max(const std::function<double(double)>& f, double lo,
                    double guess, double hi, double tol, int max_iter) {
  quiet_gsl();
  const double flo = f(lo), fg = f(guess), fhi = f(hi);
  if (!(fg > flo && fg > fhi)) return golden_max(f, lo, hi, tol, max_iter);
  gsl_function fn;
  fn.function = [](double v, void* p) {
    return -(*static_cast<const std::function<double(double)>*>(p))(v);
  };
  fn.params = const_cast<std::function<double(double)>*>(&f);
  gsl_min_fminimizer* s = gsl_min_fminimizer_alloc(gsl_min_fminimizer_brent);
  if (gsl_min_fminimizer_set_with_values(s, &fn, guess, -fg, lo, -flo, hi, -fhi) !=
      GSL_SUCCESS) {
    gsl_min_fminimizer_free(s);
    return golden_max(f, lo, hi, tol, max_iter);
  }
  LineResult r;
  double width = hi - lo;
  int stale = 0;
  while (r.iterations < max_iter) {
    ++r.iterations;
    if (gsl_min_fminimizer_iterate(s) != GSL_SUCCESS) break;
    const double a = gsl_min_fminimizer_x_lower(s);
    const double b = gsl_min_fminimizer_x_upper(s);
    // Brent cannot shrink its bracket much below sqrt(eps) |x|
    if (gsl_min_test_interval(a, b, tol, 0.0) == GSL_SUCCESS ||
        (b - a < 1e-7 * std::max(1.0, std::abs(a)) && ++stale > 20)) {
      r.converged = true;
      break;
    }
    if (b - a < width) {
      width = b - a;
      stale = 0;
    }
  }
  r.x = gsl_min_fminimizer_x_minimum(s);
  r.value = -gsl_min_fminimizer_f_minimum(s);
  gsl_min_fminimizer_free(s);
  return r;
}

std::optional<double> bracketed_root(const std::function<double(double)>& f, double a,
                                     double b, double tol, int max_iter) {
  quiet_gsl();
  const double fa = f(a), fb = f(b);
  if (!std::isfinite(fa) || !std::isfinite(fb)) return std::nullopt;
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0)) return std::nullopt;
  gsl_function gf;
  gf.function = [](double x, void* p) {
    return (*static_cast<const std::function<double(double)>*>(p))(x);
  };
  gf.params = const_cast<std::function<double(double)>*>(&f);
  gsl_root_fsolver* s = gsl_root_fsolver_alloc(gsl_root_fsolver_brent);
  if (gsl_root_fsolver_set(s, &gf, a, b) != GSL_SUCCESS) {
    gsl_root_fsolver_free(s);
    return std::nullopt;
  }
  double x = 0.5 * (a + b);
  for (int i = 0; i < max_iter; ++i) {
    if (gsl_root_fsolver_iterate(s) != GSL_SUCCESS) break;
    x = gsl_root_fsolver_root(s);
    const double lo = gsl_root_fsolver_x_lower(s), hi = gsl_root_fsolver_x_upper(s);
    if (gsl_root_test_interval(lo, hi, tol, 0.0) == GSL_SUCCESS) break;
  }
  gsl_root_fsolver_free(s);
  return x;
}

}  // namespace levy_optstop
