#pragma once

#include "levy_optstop/levy.hpp"
#include "levy_optstop/pricing.hpp"

namespace levy_optstop {

// Dual market under the share measure: drift -mu - sigma^2, jump measure
// e^{-y} Pi(-dy), rates swapped.
struct DualModel {
  LevyModel model;
  double q_dual = 0.0;
  double delta_dual = 0.0;

  // -X of the dual, the spectrally negative process whose right inverse
  // satisfies Phi(q_dual) = Phi_original(q) - 1 for a downward-jump (or
  // Black-Scholes) original.
  LevyModel reflected() const;
};

DualModel dual_model(const LevyModel& model, double q, double delta);

// The put contract priced on the dual model: spot and strike swapped, q and
// delta swapped.
OptionSpec dual_put_spec(const OptionSpec& call);

ContinuationRegion call_boundaries(const ContinuationRegion& put_region, double s,
                                   double strike);

ValuationResult price_call(const LevyModel& model, const OptionSpec& spec);

}  // namespace levy_optstop
