#include "levy_optstop/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>

#include "levy_optstop/error.hpp"

namespace levy_optstop {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

// Exponential-Levy dynamics under the Esscher measure with parameter theta.
struct Dynamics {
  double drift = 0.0, sigma = 0.0, lambda = 0.0, rho = 1.0;
  double sign = -1.0;  // direction of jumps
};

Dynamics tilted(const LevyModel& m, double theta) {
  Dynamics d;
  d.sigma = m.sigma;
  d.drift = m.mu + m.sigma * m.sigma * theta;
  if (m.has_jumps()) {
    d.sign = m.spectrally_negative() ? -1.0 : 1.0;
    d.rho = m.rho - d.sign * theta;
    d.lambda = m.lambda * m.rho / d.rho;
  }
  return d;
}

// Minimiser of psi and the two roots of psi = q around it, located by
// bisection inside the exponential-moment strip.
struct Strip {
  double theta_min = 0.0, psi_min = 0.0;
  std::optional<double> lo, hi;
};

Strip strip(const LevyModel& m, double q) {
  const bool pole_left = m.has_jumps() && m.spectrally_negative();
  const bool pole_right = m.has_jumps() && !m.spectrally_negative();
  // stays 1e-11 relative clear of a pole
  auto left = [&](int k) {
    return pole_left ? -m.rho + m.rho * std::ldexp(1.0, -std::min(k, 36)) : -std::ldexp(1.0, k);
  };
  auto right = [&](int k) {
    return pole_right ? m.rho - m.rho * std::ldexp(1.0, -std::min(k, 36)) : std::ldexp(1.0, k);
  };
  auto dpsi = [&](double t) { return laplace_exponent_derivative(m, t); };
  auto psi = [&](double t) { return laplace_exponent(m, t); };
  auto bisect = [](auto&& f, double a, double b) {
    // f(a) < 0 < f(b)
    for (int i = 0; i < 200; ++i) {
      const double c = 0.5 * (a + b);
      if (c == a || c == b) break;
      (f(c) < 0.0 ? a : b) = c;
    }
    return 0.5 * (a + b);
  };
  double a = 0.0, b = 0.0;
  for (int k = 0; k < 60 && !(dpsi(a) < 0.0); ++k) a = left(k);
  for (int k = 0; k < 60 && !(dpsi(b) > 0.0); ++k) b = right(k);
  Strip s;
  s.theta_min = dpsi(0.0) == 0.0 ? 0.0 : bisect(dpsi, a, b);
  s.psi_min = psi(s.theta_min);
  if (!(s.psi_min < q)) return s;
  const double tm = s.theta_min;
  auto left_of = [&](int k) {
    return pole_left ? -m.rho + (tm + m.rho) * std::ldexp(1.0, -std::min(k, 36)) : tm - std::ldexp(1.0, k);
  };
  auto right_of = [&](int k) {
    return pole_right ? m.rho - (m.rho - tm) * std::ldexp(1.0, -std::min(k, 36)) : tm + std::ldexp(1.0, k);
  };
  double pa = tm, pb = tm;
  for (int k = 1; k < 60 && !(psi(pa) > q); ++k) pa = left_of(k);
  for (int k = 1; k < 60 && !(psi(pb) > q); ++k) pb = right_of(k);
  if (psi(pa) > q) s.lo = bisect([&](double t) { return q - psi(t); }, pa, s.theta_min);
  if (psi(pb) > q) s.hi = bisect([&](double t) { return psi(t) - q; }, s.theta_min, pb);
  return s;
}

struct Entry {
  double time, level;
};

// First entrance of [l, u] by Brownian pieces started outside it.
class BridgeSampler {
 public:
  BridgeSampler(double sigma, double l, double u, double dt) : s2_(sigma * sigma), l_(l), u_(u), dt_(dt) {}

  bool inside(double y) const { return y >= l_ && y <= u_; }

  // Piece from (t0, a) to (t1, b) with a outside [l, u]. The crossing is
  // decided with the exact bridge probability; its time comes from the
  // reflected bridge, resolved to dt.
  std::optional<Entry> piece(double t0, double a, double t1, double b, std::mt19937_64& rng) {
    const bool above = a > u_;
    const double c = above ? u_ : l_;
    auto beyond = [&](double v) { return above ? v <= c : v >= c; };
    if (!beyond(b)) {
      const double p = std::exp(-2.0 * (a - c) * (b - c) / (s2_ * (t1 - t0)));
      if (!(unif_(rng) < p)) return std::nullopt;
      b = 2.0 * c - b;
    }
    while (t1 - t0 > dt_) {
      const double tm = 0.5 * (t0 + t1);
      const double m = 0.5 * (a + b) + 0.5 * std::sqrt(s2_ * (t1 - t0)) * norm_(rng);
      if (beyond(m)) {
        t1 = tm;
        b = m;
        continue;
      }
      const double p = std::exp(-2.0 * (a - c) * (m - c) / (s2_ * (tm - t0)));
      if (unif_(rng) < p) {
        t1 = tm;
        b = 2.0 * c - m;
      } else {
        t0 = tm;
        a = m;
      }
    }
    return Entry{0.5 * (t0 + t1), c};
  }

  // Largest probability that a bridge from a to b over h reaches level c
  // (both endpoints strictly on one side).
  double reach(double a, double b, double c, double h) const {
    if ((a - c) * (b - c) <= 0.0) return 1.0;
    return std::exp(-2.0 * (a - c) * (b - c) / (s2_ * h));
  }

  std::normal_distribution<double> norm_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};

 private:
  double s2_, l_, u_, dt_;
};

}  // namespace

void McConfig::validate() const {
  if (paths < 100) throw Error(ErrorKind::InvalidParameter, "mc.paths must be >= 100");
  if (!(dt > 0.0 && dt <= 0.01)) throw Error(ErrorKind::InvalidParameter, "mc.dt must lie in (0, 0.01]");
  if (!(horizon >= 10.0)) throw Error(ErrorKind::InvalidParameter, "mc.horizon must be >= 10");
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t path) {
  const std::uint64_t k = splitmix64(splitmix64(splitmix64(seed) ^ stream) + path);
  return std::mt19937_64(k);
}

int worker_threads() {
  if (const char* env = std::getenv("LEVY_OPTSTOP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
  const int t = static_cast<int>(std::min<std::int64_t>(worker_threads(), std::max<std::int64_t>(n, 1)));
  if (t <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      for (std::int64_t i = w; i < n; i += t) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

McEstimate summarize(const std::vector<double>& values) {
  McEstimate e;
  const std::size_t n = values.size();
  e.paths = static_cast<std::int64_t>(n);
  if (n == 0) return e;
  e.mean = pairwise_sum(values.data(), n) / static_cast<double>(n);
  if (n > 1) {
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - e.mean) * (values[i] - e.mean);
    const double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
    e.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return e;
}

double simulate_increment(const LevyModel& model, double dt, std::mt19937_64& rng) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidParameter, "dt must be positive");
  std::normal_distribution<double> norm(0.0, 1.0);
  double x = model.mu * dt + model.sigma * std::sqrt(dt) * norm(rng);
  if (model.has_jumps()) {
    std::poisson_distribution<long> pois(model.lambda * dt);
    const long n = pois(rng);
    if (n > 0) {
      std::gamma_distribution<double> total(static_cast<double>(n), 1.0 / model.rho);
      const double j = total(rng);
      x += model.spectrally_negative() ? -j : j;
    }
  }
  return x;
}

Payoff put_payoff(double strike) {
  return [strike](double z) { return strike - std::exp(z); };
}

Payoff call_payoff(double strike) {
  return [strike](double z) { return std::exp(z) - strike; };
}

McEstimate mc_entrance_value(const LevyModel& model, double l, double u, double x,
                             const Payoff& payoff, double q, const McConfig& config) {
  model.validate();
  config.validate();
  if (!(l <= u) || std::isnan(l) || !std::isfinite(u)) {
    throw Error(ErrorKind::Domain, "entrance interval needs l <= u with finite u");
  }
  McEstimate out;
  if (x >= l && x <= u) {
    out.mean = payoff(x);
    out.paths = config.paths;
    return out;
  }
  const bool from_above = x > u;
  if (!from_above && !std::isfinite(l)) {
    throw Error(ErrorKind::Domain, "start below an unbounded interval");
  }
  const Strip st = strip(model, q);
  const bool roots = st.lo && st.hi;
  // Esscher parameters strictly between a root and the minimiser, so that
  // psi(theta) < q and the tilted drift points at the interval; the measure
  // is switched when a jump carries the path to the other side.
  double theta_above = 0.0, theta_below = 0.0;
  if (config.change_of_measure && roots) {
    theta_above = 0.5 * (*st.lo + st.theta_min);
    theta_below = 0.5 * (st.theta_min + *st.hi);
    if (!std::isfinite(l)) theta_above = std::min(theta_above, 0.0);
  }
  const Dynamics dyn_above = tilted(model, theta_above);
  const Dynamics dyn_below = tilted(model, theta_below);
  const double rate_above = laplace_exponent(model, theta_above) - q;
  const double rate_below = laplace_exponent(model, theta_below) - q;

  const double l_eff = std::isfinite(l) ? l : u - 40.0;
  double gmax = 0.0;
  for (int i = 0; i <= 64; ++i) gmax = std::max(gmax, std::abs(payoff(l_eff + (u - l_eff) * i / 64.0)));

  // log of (likelihood ratio) * e^{-q t} carried by the path; the remaining
  // contribution from y is at most gmax times that ratio times
  // E_y[e^{-q tau}], bounded through the martingales e^{theta X - q t} at
  // the two roots.
  auto bound = [&](double log_ratio, double y) {
    double e = log_ratio;
    if (roots) e += y > u ? *st.lo * (y - u) : -*st.hi * (l - y);
    return gmax * std::exp(e);
  };
  const double kill = config.kill_tolerance * bound(0.0, x);

  const auto n = static_cast<std::size_t>(config.paths);
  std::vector<double> value(n, 0.0), cut(n, 0.0);
  std::vector<char> truncated(n, 0);
  parallel_for(config.paths, [&](std::int64_t i) {
    std::mt19937_64 rng = path_rng(config.seed, config.stream, static_cast<std::uint64_t>(i));
    BridgeSampler bs(model.sigma, l, u, config.dt);
    std::vector<double> times, sizes;
    double t = 0.0, y = x, log_ratio = 0.0;
    for (;;) {
      const bool above = y > u;
      const Dynamics& dyn = above ? dyn_above : dyn_below;
      const double theta = above ? theta_above : theta_below;
      const double rate = above ? rate_above : rate_below;
      auto advance = [&](double to_y, double span) {
        log_ratio += -theta * (to_y - y) + rate * span;
        t += span;
        y = to_y;
      };
      auto stop = [&](double span, double z) {
        advance(z, span);
        value[i] = std::exp(log_ratio) * payoff(z);
      };
      const double b_now = bound(log_ratio, y);
      if (b_now < kill || t >= config.horizon) {
        truncated[i] = 1;
        cut[i] = b_now;
        return;
      }
      const double d = above ? y - u : l - y;
      const double s2 = dyn.sigma * dyn.sigma;
      double span = std::max(d * d / ((dyn.lambda > 0.0 ? 40.0 : 8.0) * s2), 64.0 * config.dt);
      span = std::min(span, config.horizon - t);
      const double w_end = dyn.drift * span + dyn.sigma * std::sqrt(span) * bs.norm_(rng);
      if (dyn.lambda == 0.0) {
        if (auto hit = bs.piece(0.0, y, span, y + w_end, rng)) {
          stop(hit->time, hit->level);
          return;
        }
        advance(y + w_end, span);
        continue;
      }
      const long n_jumps = std::poisson_distribution<long>(dyn.lambda * span)(rng);
      const double total =
          n_jumps > 0 ? std::gamma_distribution<double>(static_cast<double>(n_jumps), 1.0 / dyn.rho)(rng)
                      : 0.0;
      // Jumps move the path monotonically, so a shifted level bounds entrance.
      const bool toward = (dyn.sign < 0.0) == above;
      const double c = above ? u + (toward ? total : 0.0) : l - (toward ? total : 0.0);
      if ((above ? y - c : c - y) > 0.0 && bs.reach(y, y + w_end, c, span) < 1e-14) {
        advance(y + w_end + dyn.sign * total, span);
        continue;
      }
      // individual jumps: uniform times, sizes splitting the total
      times.resize(static_cast<std::size_t>(n_jumps));
      sizes.resize(static_cast<std::size_t>(n_jumps));
      double parts = 0.0;
      for (long k = 0; k < n_jumps; ++k) {
        times[k] = span * bs.unif_(rng);
        sizes[k] = std::exponential_distribution<double>(1.0)(rng);
        parts += sizes[k];
      }
      for (long k = 0; k < n_jumps; ++k) sizes[k] *= total / parts;
      std::sort(times.begin(), times.end());
      // Walk the jumps in order: Brownian value at each jump time from the
      // bridge to w_end.
      double tb = 0.0, wb = 0.0, start = y;
      bool done = false;
      for (long k = 0; k <= n_jumps && !done; ++k) {
        const double tk = k < n_jumps ? times[k] : span;
        double wk = w_end;
        if (k < n_jumps) {
          const double frac = (tk - tb) / (span - tb);
          wk = wb + frac * (w_end - wb) +
               std::sqrt(std::max(s2 * (tk - tb) * (1.0 - frac), 0.0)) * bs.norm_(rng);
        }
        const double from = start + wb, to = start + wk;
        if (auto hit = bs.piece(tb, from, tk, to, rng)) {
          // y and t still refer to the span start
          stop(hit->time, hit->level);
          return;
        }
        if (k == n_jumps) {
          advance(to, span);
          done = true;
          break;
        }
        start += dyn.sign * sizes[k];
        const double pos = start + wk;
        if (bs.inside(pos)) {
          stop(tk, pos);
          return;
        }
        if ((pos > u) != above) {
          // other side: continue under that side's measure
          advance(pos, tk);
          done = true;
        }
        tb = tk;
        wb = wk;
      }
    }
  });
  out = summarize(value);
  double n_cut = 0.0;
  for (char c : truncated) n_cut += c;
  out.truncated_fraction = n_cut / static_cast<double>(n);
  out.truncation_bound = pairwise_sum(cut.data(), n) / static_cast<double>(n);
  out.bias_warning = out.truncation_bound > 3.0 * out.std_error;
  out.tilt = x > u ? theta_above : theta_below;
  return out;
}

McEstimate mc_occupation(const LevyModel& model, double q, double x, double a, double b,
                         const McConfig& config) {
  model.validate();
  config.validate();
  if (!(x >= 0.0) || !(a >= 0.0) || !(a < b)) {
    throw Error(ErrorKind::Domain, "occupation needs x >= 0 and 0 <= a < b");
  }
  const Strip st = strip(model, q);
  const double kappa = q - st.psi_min;
  if (!(kappa > 0.0)) {
    throw Error(ErrorKind::Domain, "occupation estimator needs q > min psi");
  }
  // Random time T ~ Exp(kappa) under the measure tilted at the minimiser:
  // e^{kappa T}/kappa cancels the time factor e^{(psi - q) T}.
  const double theta = st.theta_min;
  const Dynamics dyn = tilted(model, theta);
  const auto n = static_cast<std::size_t>(config.paths);
  std::vector<double> value(n, 0.0);
  parallel_for(config.paths, [&](std::int64_t i) {
    std::mt19937_64 rng = path_rng(config.seed, config.stream, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> norm(0.0, 1.0);
    std::exponential_distribution<double> horizon(kappa);
    std::exponential_distribution<double> arrival(dyn.lambda > 0.0 ? dyn.lambda : 1.0);
    std::exponential_distribution<double> jump(dyn.rho);
    const double total = horizon(rng);
    double t = 0.0, y = x, survive = 1.0;
    while (t < total && survive > 0.0) {
      double span = total - t;
      bool jumps = false;
      if (dyn.lambda > 0.0) {
        const double e = arrival(rng);
        if (e < span) {
          span = e;
          jumps = true;
        }
      }
      const double end = y + dyn.drift * span + dyn.sigma * std::sqrt(span) * norm(rng);
      if (end <= 0.0) {
        survive = 0.0;
        break;
      }
      survive *= -std::expm1(-2.0 * y * end / (dyn.sigma * dyn.sigma * span));
      t += span;
      y = end;
      if (jumps) {
        y += dyn.sign * jump(rng);
        if (y < 0.0) survive = 0.0;
      }
    }
    if (survive > 0.0 && y >= a && y <= b) value[i] = survive * std::exp(-theta * (y - x)) / kappa;
  });
  McEstimate out = summarize(value);
  out.tilt = theta;
  return out;
}

McEstimate mc_martingale_check(const LevyModel& model, double horizon, const McConfig& config) {
  model.validate();
  config.validate();
  const double psi1 = laplace_exponent(model, 1.0);
  std::vector<double> value(static_cast<std::size_t>(config.paths));
  parallel_for(config.paths, [&](std::int64_t i) {
    std::mt19937_64 rng = path_rng(config.seed, config.stream, static_cast<std::uint64_t>(i));
    value[i] = std::exp(simulate_increment(model, horizon, rng) - psi1 * horizon);
  });
  return summarize(value);
}

}  // namespace levy_optstop
