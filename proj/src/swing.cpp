#include "levy_optstop/swing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "levy_optstop/error.hpp"
#include "levy_optstop/mc.hpp"
#include "levy_optstop/optimize.hpp"

namespace levy_optstop {

namespace {

// (1 - e^{-c d}) / c, continuous at c = 0, with d possibly infinite.
double one_minus_exp_over(double c, double d) {
  if (std::isinf(d)) {
    return c > 0.0 ? 1.0 / c : std::numeric_limits<double>::infinity();
  }
  if (c == 0.0) return d;
  return -std::expm1(-c * d) / c;
}

// int_0^w (a + s t) e^{c t} dt.
double linear_exp_integral(double a, double s, double c, double w) {
  const double cw = c * w;
  double i0, i1;
  if (std::abs(cw) < 1e-3) {
    i0 = w * (1.0 + cw / 2.0 + cw * cw / 6.0 + cw * cw * cw / 24.0);
    i1 = w * w * (0.5 + cw / 3.0 + cw * cw / 8.0 + cw * cw * cw / 30.0);
  } else {
    i0 = std::expm1(cw) / c;
    i1 = (w * std::exp(cw) - i0) / c;
  }
  return a * i0 + s * i1;
}

// Log-slope used to continue a positive curve below the grid.
double lower_log_slope(const LogGrid& grid, const std::vector<double>& v) {
  if (v.size() < 2 || !(v[0] > 0.0) || !(v[1] > 0.0)) return 0.0;
  return std::log(v[1] / v[0]) / grid.step();
}

double finite_or_floor(double v) { return v > 0.0 ? std::log(v) : -1e300; }

double sample_sd(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(n);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(n - 1));
}

}  // namespace

void Refraction::validate(double q) const {
  if (!(std::isfinite(parameter) && parameter > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "refraction parameter must be > 0");
  }
  if (kind == Kind::Exponential && !(parameter + q > 0.0)) {
    throw Error(ErrorKind::InvalidParameter,
                "exponential refraction needs rate + q > 0 for a finite discount factor");
  }
}

double Refraction::sample(std::mt19937_64& rng) const {
  if (kind == Kind::Deterministic) return parameter;
  return std::exponential_distribution<double>(parameter)(rng);
}

LogGrid LogGrid::covering(double log_strike, int points) {
  return {log_strike - 6.5, log_strike + 3.5, points};
}

std::vector<double> LogGrid::nodes() const {
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = node(i);
  return out;
}

LogGrid SwingSpec::resolved_grid(const OptionSpec& option) const {
  return grid.value_or(LogGrid::covering(option.log_strike()));
}

void SwingSpec::validate(const OptionSpec& option) const {
  option.validate();
  if (n_rights < 1) throw Error(ErrorKind::InvalidParameter, "n_rights must be >= 1");
  refraction.validate(option.q);
  const LogGrid g = resolved_grid(option);
  const double lk = option.log_strike();
  if (g.points < 400) throw Error(ErrorKind::InvalidParameter, "grid needs >= 400 points");
  if (!(g.min <= lk - 6.0 + 1e-12) || !(g.max >= lk + 3.0 - 1e-12)) {
    throw Error(ErrorKind::InvalidParameter, "grid must cover [log K - 6, log K + 3]");
  }
  if (batches < 1) throw Error(ErrorKind::InvalidParameter, "batches must be >= 1");
  if (mc_paths < 100 || mc_paths / batches < 50) {
    throw Error(ErrorKind::InvalidParameter, "need mc_paths >= 100 and >= 50 per batch");
  }
}

double interpolate_curve(const LogGrid& grid, const std::vector<double>& v, double x) {
  const int n = grid.points;
  if (x <= grid.min) return v[0] * std::exp(lower_log_slope(grid, v) * (x - grid.min));
  if (x >= grid.max) return v[static_cast<std::size_t>(n - 1)];
  const double pos = (x - grid.min) / grid.step();
  const int i = std::min(static_cast<int>(pos), n - 2);
  const double w = pos - i;
  return (1.0 - w) * v[static_cast<std::size_t>(i)] + w * v[static_cast<std::size_t>(i + 1)];
}

CurveValuer::CurveValuer(const LevyModel& model, const OptionSpec& option,
                         const PayoffCurve& payoff)
    : kernel_(model, option.q), curve_(payoff), strike_(option.strike) {
  const LogGrid& g = curve_.grid;
  if (static_cast<int>(curve_.extra.size()) != g.points || g.points < 2) {
    throw Error(ErrorKind::InvalidParameter, "payoff curve does not match its grid");
  }
  if (!model.has_jumps()) return;
  c_ = model.spectrally_negative() ? model.rho : -model.rho;
  ref_ = 0.5 * (g.min + g.max);
  if (model.rho * 0.5 * (g.max - g.min) > 650.0) {
    throw Error(ErrorKind::InvalidParameter, "jump rate too large for the grid span");
  }
  // Accumulate from the end where the weight is small so that differences
  // keep their relative precision: from the bottom for c > 0 and from the
  // top (stored as minus the integral up to the top) for c < 0.
  cum_.assign(static_cast<std::size_t>(g.points), 0.0);
  const double h = g.step();
  auto cell = [&](int i) {
    const double a = curve_.extra[static_cast<std::size_t>(i)];
    const double b = curve_.extra[static_cast<std::size_t>(i + 1)];
    return std::exp(c_ * (g.node(i) - ref_)) * linear_exp_integral(a, (b - a) / h, c_, h);
  };
  if (c_ > 0.0) {
    for (int i = 1; i < g.points; ++i) {
      cum_[static_cast<std::size_t>(i)] = cum_[static_cast<std::size_t>(i - 1)] + cell(i - 1);
    }
  } else {
    for (int i = g.points - 2; i >= 0; --i) {
      cum_[static_cast<std::size_t>(i)] = cum_[static_cast<std::size_t>(i + 1)] - cell(i);
    }
  }
}

double CurveValuer::extra(double x) const { return interpolate_curve(curve_.grid, curve_.extra, x); }

double CurveValuer::payoff(double x) const {
  return curve_.intrinsic_weight * std::max(strike_ - std::exp(x), 0.0) + extra(x);
}

double CurveValuer::cumulative(double x) const {
  const LogGrid& g = curve_.grid;
  if (std::isinf(x) && x < 0.0) {
    // log-linear continuation below the grid
    const double a = lower_log_slope(g, curve_.extra);
    const double h0 = curve_.extra[0];
    if (h0 == 0.0) return 0.0;
    if (!(a + c_ > 0.0)) {
      throw Error(ErrorKind::FinitenessViolation,
                  "payoff grows too fast below the grid for the jump integral");
    }
    return cum_[0] - h0 * std::exp(c_ * (g.min - ref_)) / (a + c_);
  }
  if (x <= g.min) return cum_[0];
  const double xc = std::min(x, g.max);
  const double pos = (xc - g.min) / g.step();
  const int i = std::min(static_cast<int>(pos), g.points - 2);
  const double x0 = g.node(i);
  const double a = curve_.extra[static_cast<std::size_t>(i)];
  const double b = curve_.extra[static_cast<std::size_t>(i + 1)];
  return cum_[static_cast<std::size_t>(i)] +
         std::exp(c_ * (x0 - ref_)) * linear_exp_integral(a, (b - a) / g.step(), c_, xc - x0);
}

// Mass collected by a jump across the interval, per unit of the jump kernel:
// the payoff against the exponential landing density plus the continuation
// value of overshooting the far end.
double CurveValuer::jump_weight(double l, double u) const {
  const LevyModel& m = kernel_.model();
  const double rho = m.rho, phi = kernel_.phi(), k = strike_;
  const double lk = std::log(k), w = curve_.intrinsic_weight;
  const double d = u - l;
  const double far = std::isinf(d) ? 0.0 : std::exp(-rho * d);
  const double span = cumulative(u) - cumulative(l);
  if (kernel_.continuous_side_below()) {
    double put = 0.0;
    const double b = std::min(u, lk);
    if (w != 0.0 && l < b) {
      const double e = b - l;
      put = std::exp(-rho * (u - b)) *
            (k * one_minus_exp_over(rho, e) - std::exp(b) * one_minus_exp_over(1.0 + rho, e));
    }
    const double over = std::isinf(d) ? 0.0 : payoff(l) * far / (phi + rho);
    return w * put + std::exp(-rho * (u - ref_)) * span + over;
  }
  double put = 0.0;
  const double b = std::min(u, lk);
  if (w != 0.0 && l < b) {
    const double e = b - l;
    put = k * one_minus_exp_over(rho, e) - std::exp(l) * one_minus_exp_over(rho - 1.0, e);
  }
  return w * put + std::exp(rho * (l - ref_)) * span + payoff(u) * far / (phi + rho);
}

double CurveValuer::value(double l, double u, double x) const {
  if (!(l <= u)) throw Error(ErrorKind::Domain, "need l <= u");
  const LogGrid& g = curve_.grid;
  if (!(u <= g.max) || (std::isfinite(l) && l < g.min)) {
    throw Error(ErrorKind::Domain, "interval must lie on the payoff grid");
  }
  if (x >= l && x <= u) return payoff(x);
  const double phi = kernel_.phi();
  const bool jumps = kernel_.model().has_jumps();
  if (kernel_.continuous_side_below()) {
    if (x < l) return payoff(l) * std::exp(-phi * (l - x));
    const double y = x - u;
    const double j = jumps ? jump_weight(l, u) * kernel_.jump(y) : 0.0;
    return j + payoff(u) * kernel_.creep(y);
  }
  if (x > u) return payoff(u) * std::exp(-phi * (x - u));
  const double y = l - x;
  const double j = jumps ? jump_weight(l, u) * kernel_.jump(y) : 0.0;
  return j + payoff(l) * kernel_.creep(y);
}

PayoffCurve refraction_payoff_on(const LevyModel& model, const OptionSpec& option,
                                 const SwingSpec& spec, int level,
                                 const std::vector<double>& previous,
                                 std::int64_t first_path, std::int64_t paths) {
  PayoffCurve out;
  out.grid = spec.resolved_grid(option);
  const int n = out.grid.points;
  out.extra.assign(static_cast<std::size_t>(n), 0.0);
  out.extra_se.assign(static_cast<std::size_t>(n), 0.0);
  if (level <= 1 || previous.empty()) return out;
  if (static_cast<int>(previous.size()) != n) {
    throw Error(ErrorKind::InvalidParameter, "previous level curve does not match the grid");
  }
  const auto m = static_cast<std::size_t>(paths);
  std::vector<double> disc(m), jump(m);
  parallel_for(paths, [&](std::int64_t j) {
    std::mt19937_64 rng = path_rng(spec.seed, static_cast<std::uint64_t>(level),
                                   static_cast<std::uint64_t>(first_path + j));
    const double d = spec.refraction.sample(rng);
    disc[static_cast<std::size_t>(j)] = std::exp(-option.q * d);
    jump[static_cast<std::size_t>(j)] = simulate_increment(model, d, rng);
  });
  const std::vector<double> nodes = out.grid.nodes();
  // escapes are counted from nodes in the required window only
  const double lk = option.log_strike();
  std::vector<std::int64_t> escaped(static_cast<std::size_t>(n), 0);
  std::vector<char> core(static_cast<std::size_t>(n), 0);
  parallel_for(n, [&](std::int64_t i) {
    const double x = nodes[static_cast<std::size_t>(i)];
    const bool in_core = x >= lk - 6.0 - 1e-12 && x <= lk + 3.0 + 1e-12;
    core[static_cast<std::size_t>(i)] = in_core;
    std::vector<double> vals(m);
    std::int64_t esc = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double y = x + jump[j];
      if (in_core && (y < out.grid.min || y > out.grid.max)) ++esc;
      vals[j] = disc[j] * interpolate_curve(out.grid, previous, y);
    }
    const McEstimate e = summarize(vals);
    out.extra[static_cast<std::size_t>(i)] = e.mean;
    out.extra_se[static_cast<std::size_t>(i)] = e.std_error;
    escaped[static_cast<std::size_t>(i)] = esc;
  });
  std::int64_t total = 0, starts = 0;
  for (int i = 0; i < n; ++i) {
    total += escaped[static_cast<std::size_t>(i)];
    starts += core[static_cast<std::size_t>(i)];
  }
  out.escape_fraction = static_cast<double>(total) / (static_cast<double>(starts) * m);
  out.escape_warning = out.escape_fraction > 0.01;
  return out;
}

PayoffCurve refraction_payoff(const LevyModel& model, const OptionSpec& option,
                              const SwingSpec& spec, int level,
                              const std::vector<double>& previous) {
  spec.validate(option);
  return refraction_payoff_on(model, option, spec, level, previous, 0, spec.mc_paths);
}

LevelSolution solve_level(const LevyModel& model, const OptionSpec& option,
                          const PayoffCurve& payoff) {
  option.validate();
  LevelSolution sol;
  const LogGrid& grid = payoff.grid;
  const bool zero = payoff.intrinsic_weight == 0.0 &&
                    std::all_of(payoff.extra.begin(), payoff.extra.end(),
                                [](double v) { return v <= 0.0; });
  if (zero) {
    sol.value.assign(static_cast<std::size_t>(grid.points), 0.0);
    return sol;
  }
  OptionSpec put = option;
  put.kind = OptionKind::Put;
  const Regime regime = classify_region(model, put);
  if (regime == Regime::NoEarlyExercise) return sol;
  sol.regime = regime == Regime::DegeneratePoint ? Regime::DoubleRegion : regime;

  const CurveValuer cv(model, option, payoff);
  const double lk = option.log_strike();
  const double lo = std::max(grid.min, lk - 6.0), hi = lk - 1e-9;
  std::vector<double> box;
  for (int i = 0; i < grid.points && grid.node(i) < hi; ++i) {
    if (grid.node(i) >= lo) box.push_back(grid.node(i));
  }
  box.push_back(hi);
  const int n = static_cast<int>(box.size());
  const double h = grid.step();
  const double edge_tol = 1e-6;

  if (sol.regime == Regime::SingleHalfLine) {
    const double x_hi = lk + 0.5;
    auto f = [&](double u) {
      if (u < lo || u > hi) return -1e300;
      return finite_or_floor(cv.value(kNoLower, u, x_hi));
    };
    int best = 0;
    for (int i = 1; i < n; ++i) {
      if (f(box[static_cast<std::size_t>(i)]) > f(box[static_cast<std::size_t>(best)])) best = i;
    }
    const LineResult r =
        line_max(f, box[static_cast<std::size_t>(std::max(best - 1, 0))],
                 box[static_cast<std::size_t>(best)],
                 box[static_cast<std::size_t>(std::min(best + 1, n - 1))], 1e-12, 500);
    sol.u_star = r.x;
    sol.iterations = r.iterations;
    sol.edge_optimum = r.x - lo < edge_tol || hi - r.x < edge_tol;
    sol.value.resize(static_cast<std::size_t>(grid.points));
    for (int i = 0; i < grid.points; ++i) {
      sol.value[static_cast<std::size_t>(i)] = cv.value(kNoLower, r.x, grid.node(i));
    }
    return sol;
  }

  const double x_lo = lo - 1.0, x_hi = lk + 0.5;
  int bi = 0, bj = 0;
  double fbest = -1e301;
  for (int i = 0; i < n; ++i) {
    const double l = box[static_cast<std::size_t>(i)];
    for (int j = i; j < n; ++j) {
      const double u = box[static_cast<std::size_t>(j)];
      const double v = finite_or_floor(cv.value(l, u, x_lo)) + finite_or_floor(cv.value(l, u, x_hi));
      if (v > fbest) {
        fbest = v;
        bi = i;
        bj = j;
      }
    }
  }
  const double l0 = box[static_cast<std::size_t>(bi)], u0 = box[static_cast<std::size_t>(bj)];
  // Probes just outside the grid optimum keep the objective sensitive to
  // the jump-side boundary.
  const double r_lo = l0 - 0.3;
  const double r_hi = std::max(u0 + 0.3, lk + 0.05);
  const double l_min = std::max(lo, r_lo + 0.05);
  auto g = [&](double l, double u) {
    if (l < l_min || u > hi || l > u) return -1e300;
    return finite_or_floor(cv.value(l, u, r_lo)) + finite_or_floor(cv.value(l, u, r_hi));
  };
  const SimplexResult s = nelder_mead_max(g, l0, u0, 0.5 * h, 1e-9, 10000);
  if (!s.converged) {
    throw Error(ErrorKind::OptimizerFailure,
                "level simplex did not converge; best iterate l = " + std::to_string(s.x0) +
                    ", u = " + std::to_string(s.x1));
  }
  double l = s.x0, u = s.x1;
  for (int round = 0; round < 4; ++round) {
    const double w = 0.5 * h;
    l = line_max([&](double t) { return g(t, u); }, std::max(l - w, l_min), l,
                 std::min(l + w, u), 1e-12, 200)
            .x;
    u = line_max([&](double t) { return g(l, t); }, std::max(u - w, l), u, std::min(u + w, hi),
                 1e-12, 200)
            .x;
  }
  sol.l_star = l;
  sol.u_star = u;
  sol.iterations = s.iterations;
  sol.edge_optimum = l - lo < edge_tol || hi - u < edge_tol;
  sol.value.resize(static_cast<std::size_t>(grid.points));
  for (int i = 0; i < grid.points; ++i) {
    sol.value[static_cast<std::size_t>(i)] = cv.value(l, u, grid.node(i));
  }
  return sol;
}

double SwingResult::value(int k, double s) const {
  if (k < 1 || k > static_cast<int>(levels.size())) {
    throw Error(ErrorKind::InvalidParameter, "level out of range");
  }
  const SwingLevel& lv = levels[static_cast<std::size_t>(k - 1)];
  if (!lv.solution.u_star) throw Error(ErrorKind::NotApplicable, "level has no stopping region");
  const CurveValuer cv(model, option, lv.payoff);
  return cv.value(lv.solution.l_star.value_or(kNoLower), *lv.solution.u_star, std::log(s));
}

SwingResult solve_swing(const LevyModel& model, const OptionSpec& option, const SwingSpec& spec) {
  spec.validate(option);
  if (option.kind != OptionKind::Put) {
    throw Error(ErrorKind::InvalidParameter, "swing valuation needs a put contract");
  }
  if (option.q < 0.0 && mean_increment(model) <= 0.0) {
    throw Error(ErrorKind::FinitenessViolation,
                "finiteness condition E[X_1] > 0 fails for q < 0; the swing value is infinite");
  }
  SwingResult res;
  res.model = model;
  res.option = option;
  res.grid = spec.resolved_grid(option);
  res.regime = classify_region(model, option);
  if (res.regime == Regime::NoEarlyExercise) {
    throw Error(ErrorKind::NotApplicable,
                "no entrance rule attains the value (no early exercise region)");
  }

  const int n = res.grid.points;
  const std::int64_t per_batch = spec.mc_paths / spec.batches;
  struct Chain {
    std::vector<double> prev;
  };
  std::vector<Chain> chains(static_cast<std::size_t>(spec.batches));
  std::vector<double> prev;
  for (int k = 1; k <= spec.n_rights; ++k) {
    SwingLevel lv;
    lv.k = k;
    lv.payoff = refraction_payoff_on(model, option, spec, k, prev, 0, spec.mc_paths);
    lv.solution = solve_level(model, option, lv.payoff);
    if (!lv.solution.u_star) throw Error(ErrorKind::NotApplicable, "level has no stopping region");
    lv.value_se.assign(static_cast<std::size_t>(n), 0.0);
    if (k > 1 && spec.batches > 1) {
      std::vector<double> ls, us;
      std::vector<std::vector<double>> vals;
      for (int b = 0; b < spec.batches; ++b) {
        Chain& c = chains[static_cast<std::size_t>(b)];
        const PayoffCurve pc =
            refraction_payoff_on(model, option, spec, k, c.prev, b * per_batch, per_batch);
        LevelSolution s = solve_level(model, option, pc);
        if (s.l_star) ls.push_back(*s.l_star);
        if (s.u_star) us.push_back(*s.u_star);
        c.prev = std::move(s.value);
        vals.push_back(c.prev);
      }
      const double root_b = std::sqrt(static_cast<double>(spec.batches));
      lv.se_l = sample_sd(ls) / root_b;
      lv.se_u = sample_sd(us) / root_b;
      std::vector<double> col(vals.size());
      for (int i = 0; i < n; ++i) {
        for (std::size_t b = 0; b < vals.size(); ++b) col[b] = vals[b][static_cast<std::size_t>(i)];
        lv.value_se[static_cast<std::size_t>(i)] = sample_sd(col) / root_b;
      }
    } else {
      for (Chain& c : chains) c.prev = lv.solution.value;
    }
    prev = lv.solution.value;
    res.levels.push_back(std::move(lv));
  }
  return res;
}

}  // namespace levy_optstop
