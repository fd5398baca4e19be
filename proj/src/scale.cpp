#include "levy_optstop/scale.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <mutex>

#include "levy_optstop/error.hpp"

namespace levy_optstop {

namespace {

constexpr double kConfluentGap = 1e-8;

void quiet_gsl() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

}  // namespace

ScaleFunction::ScaleFunction(const LevyModel& model, double q)
    : driver_(scale_driver(model)), q_(q) {
  const RootSet rs = psi_equation_roots(driver_, q);
  if (!rs.phi_q || !rs.all_real) {
    throw Error(ErrorKind::MissingPhi,
                "psi(phi) = q has no admissible real root set; scale function "
                "undefined for this rate");
  }
  phi_ = *rs.phi_q;
  roots_.push_back(phi_);
  roots_.insert(roots_.end(), rs.negative_roots.begin(), rs.negative_roots.end());
  for (std::size_t i = 0; i < roots_.size();) {
    if (i + 1 < roots_.size() &&
        std::abs(roots_[i] - roots_[i + 1]) < kConfluentGap) {
      groups_.emplace_back(i, i + 1);
      i += 2;
    } else {
      groups_.emplace_back(i, i);
      i += 1;
    }
  }
}

ScaleEval ScaleFunction::eval(double x) const {
  ScaleEval out;
  if (x < 0.0) return out;
  out.w = x == 0.0 ? 0.0 : apply([x](auto t) { using std::exp; return exp(t * x); });
  out.w_prime = apply([x](auto t) { using std::exp; return t * exp(t * x); });
  out.w_double_prime = apply([x](auto t) { using std::exp; return t * t * exp(t * x); });
  return out;
}

ScaleEval scale_eval(const LevyModel& model, double q, double x) {
  if (!std::isfinite(x)) throw Error(ErrorKind::Domain, "x must be finite");
  return ScaleFunction(model, q).eval(x);
}

double resolvent_density(const LevyModel& model, double q, double x, double z) {
  if (!(x >= 0.0) || !(z >= 0.0)) {
    throw Error(ErrorKind::Domain, "resolvent density needs x >= 0 and z >= 0");
  }
  const ScaleFunction w(model, q);
  return std::exp(-w.phi() * z) * w.eval(x).w - w.eval(x - z).w;
}

double laplace_identity_residual(const LevyModel& model, double q, double phi) {
  quiet_gsl();
  const ScaleFunction w(model, q);
  if (!(phi > w.phi())) {
    throw Error(ErrorKind::Domain, "laplace identity needs phi > Phi(q)");
  }
  const double upper = std::max(50.0, 40.0 / (phi - w.phi()));
  struct Ctx {
    const ScaleFunction* w;
    double phi;
  } ctx{&w, phi};
  gsl_function fn;
  fn.function = [](double u, void* p) {
    const auto* c = static_cast<const Ctx*>(p);
    return std::exp(-c->phi * u) * c->w->eval(u).w;
  };
  fn.params = &ctx;
  constexpr std::size_t limit = 10000;
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(limit);
  double value = 0.0, abserr = 0.0;
  gsl_integration_qag(&fn, 0.0, upper, 1e-12, 1e-12, limit, GSL_INTEG_GAUSS21,
                      ws, &value, &abserr);
  gsl_integration_workspace_free(ws);
  const LevyModel& d = w.driver();
  return std::abs(value - 1.0 / (laplace_exponent(d, phi) - q));
}

}  // namespace levy_optstop
