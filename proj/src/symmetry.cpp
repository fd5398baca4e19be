#include "levy_optstop/symmetry.hpp"

#include <cmath>

#include "levy_optstop/error.hpp"

namespace levy_optstop {

LevyModel DualModel::reflected() const {
  LevyModel r = model;
  r.mu = -model.mu;
  if (model.has_jumps()) r.jump_sign = JumpSign::SpectrallyNegative;
  if (model.has_jumps() && model.spectrally_negative()) {
    throw Error(ErrorKind::NotApplicable,
                "dual of an upward-jump model already has downward jumps");
  }
  return r;
}

DualModel dual_model(const LevyModel& model, double q, double delta) {
  model.validate();
  DualModel d;
  d.q_dual = delta;
  d.delta_dual = q;
  const double mu = -model.mu - model.sigma * model.sigma;
  if (!model.has_jumps()) {
    d.model = LevyModel::black_scholes(mu, model.sigma);
    return d;
  }
  const double lam = model.lambda, rho = model.rho;
  if (model.spectrally_negative()) {
    d.model = LevyModel::exp_jump_diffusion(mu, model.sigma, lam * rho / (rho + 1.0), rho + 1.0,
                                            JumpSign::SpectrallyPositive);
  } else {
    if (!(rho > 1.0)) {
      throw Error(ErrorKind::InvalidParameter,
                  "upward exponential jumps need rho > 1 for the dual measure to exist");
    }
    d.model = LevyModel::exp_jump_diffusion(mu, model.sigma, lam * rho / (rho - 1.0), rho - 1.0,
                                            JumpSign::SpectrallyNegative);
  }
  return d;
}

OptionSpec dual_put_spec(const OptionSpec& call) {
  OptionSpec p;
  p.kind = OptionKind::Put;
  p.strike = call.spot;
  p.spot = call.strike;
  p.q = call.delta;
  p.delta = call.q;
  return p;
}

ContinuationRegion call_boundaries(const ContinuationRegion& put_region, double s,
                                   double strike) {
  const double c = std::log(s) + std::log(strike);
  ContinuationRegion out;
  out.regime = put_region.regime;
  switch (put_region.regime) {
    case Regime::NoEarlyExercise:
      break;
    case Regime::SingleHalfLine:
      out.l_star = c - *put_region.u_star;
      break;
    case Regime::DoubleRegion:
    case Regime::DegeneratePoint:
      out.l_star = c - *put_region.u_star;
      out.u_star = c - *put_region.l_star;
      break;
  }
  return out;
}

ValuationResult price_call(const LevyModel& model, const OptionSpec& spec) {
  spec.validate();
  if (spec.kind != OptionKind::Call) {
    throw Error(ErrorKind::InvalidParameter, "price_call needs a call contract");
  }
  const DualModel dual = dual_model(model, spec.q, spec.delta);
  const OptionSpec put = dual_put_spec(spec);
  ValuationResult res = price_put(dual.model, put);
  res.region = call_boundaries(res.region, spec.spot, spec.strike);
  res.phi_q = phi_right_inverse(model, spec.q);
  const Regime classified = classify_region(model, spec);
  res.diagnostics["classified_regime_mismatch"] = classified != res.region.regime ? 1.0 : 0.0;
  res.diagnostics["intrinsic"] = spec.intrinsic(spec.spot);
  return res;
}

}  // namespace levy_optstop
