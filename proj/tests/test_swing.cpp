#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "fixtures.hpp"
#include "levy_optstop/error.hpp"
#include "levy_optstop/mc.hpp"
#include "levy_optstop/pricing.hpp"
#include "levy_optstop/swing.hpp"

using namespace levy_optstop;

namespace {

OptionSpec put_spec(double q = fixtures::kQNeg, double spot = 0.8) {
  return OptionSpec{OptionKind::Put, fixtures::kStrike, q, fixtures::kDeltaBs, spot};
}

SwingSpec ladder(int n, std::int64_t paths = 10000) {
  SwingSpec s;
  s.n_rights = n;
  s.refraction = Refraction::deterministic(0.5);
  s.mc_paths = paths;
  s.seed = 99;
  return s;
}

std::vector<LevyModel> models() {
  return {fixtures::bs_base(), fixtures::jd_base(),
          fixtures::jd_base(JumpSign::SpectrallyPositive)};
}

// Shared 5-right ladders, one per model; computing them once keeps the
// suite fast.
const std::vector<SwingResult>& ladders() {
  static const std::vector<SwingResult> out = [] {
    std::vector<SwingResult> r;
    for (const auto& m : models()) r.push_back(solve_swing(m, put_spec(), ladder(5)));
    return r;
  }();
  return out;
}

PayoffCurve zero_extra(const OptionSpec& o, double weight = 1.0) {
  PayoffCurve c;
  c.grid = LogGrid::covering(o.log_strike());
  c.extra.assign(static_cast<std::size_t>(c.grid.points), 0.0);
  c.extra_se = c.extra;
  c.intrinsic_weight = weight;
  return c;
}

}  // namespace

TEST(SwingSpec, Validation) {
  const OptionSpec o = put_spec();
  SwingSpec s = ladder(2);
  EXPECT_NO_THROW(s.validate(o));
  s.n_rights = 0;
  EXPECT_THROW(s.validate(o), Error);
  s = ladder(2);
  s.refraction = Refraction::deterministic(0.0);
  EXPECT_THROW(s.validate(o), Error);
  s.refraction = Refraction::exponential(0.005);  // rate + q < 0
  EXPECT_THROW(s.validate(o), Error);
  s = ladder(2);
  s.grid = LogGrid{o.log_strike() - 5.0, o.log_strike() + 3.0, 500};
  EXPECT_THROW(s.validate(o), Error);
  s.grid = LogGrid{o.log_strike() - 6.0, o.log_strike() + 3.0, 300};
  EXPECT_THROW(s.validate(o), Error);
  s = ladder(2, 50);
  EXPECT_THROW(s.validate(o), Error);
}

TEST(CurveValuer, ZeroExtraIsThePut) {
  const OptionSpec o = put_spec();
  const double lk = o.log_strike();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& m : models()) {
    const CurveValuer cv(m, o, zero_extra(o));
    const PutValuer pv(m, o);
    for (int i = 0; i < 200; ++i) {
      const double u = lk - 0.01 - 2.0 * unif(rng);
      const double l = u - 2.0 * unif(rng);
      const double x = l - 1.0 + (u - l + 2.5) * unif(rng);
      const double want = pv.value(l, u, x);
      EXPECT_NEAR(cv.value(l, u, x), want, 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

// General payoffs against the path-simulation oracle.
TEST(CurveValuer, GeneralPayoffMatchesMonteCarlo) {
  const OptionSpec o = put_spec();
  const double lk = o.log_strike();
  PayoffCurve c = zero_extra(o);
  const auto nodes = c.grid.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) c.extra[i] = 0.3 * std::exp(-0.5 * (nodes[i] - lk));
  McConfig cfg;
  cfg.paths = 40000;
  cfg.seed = 31;
  const double l = std::log(0.35), u = std::log(0.7);
  for (const auto& m : models()) {
    const CurveValuer cv(m, o, c);
    for (double x : {l - 0.6, u + 0.05, u + 0.5}) {
      const double analytic = cv.value(l, u, x);
      const McEstimate e =
          mc_entrance_value(m, l, u, x, [&cv](double z) { return cv.payoff(z); }, o.q, cfg);
      EXPECT_LE(std::abs(e.mean - analytic), 3.0 * e.std_error)
          << "x " << x << " mc " << e.mean << " se " << e.std_error << " analytic " << analytic;
      EXPECT_LT(e.truncation_bound, e.std_error);
    }
  }
}

TEST(RefractionPayoff, FirstLevelIsThePut) {
  const OptionSpec o = put_spec();
  const PayoffCurve c = refraction_payoff(fixtures::bs_base(), o, ladder(3), 1, {});
  for (double h : c.extra) EXPECT_EQ(h, 0.0);
  EXPECT_EQ(c.intrinsic_weight, 1.0);
}

TEST(RefractionPayoff, ConstantCurveWithoutDiscounting) {
  const OptionSpec o = put_spec(0.0);
  for (const auto& m : models()) {
    const SwingSpec s = ladder(2, 2000);
    const LogGrid g = s.resolved_grid(o);
    const std::vector<double> flat(static_cast<std::size_t>(g.points), 0.37);
    const PayoffCurve c = refraction_payoff(m, o, s, 2, flat);
    for (double h : c.extra) EXPECT_NEAR(h, 0.37, 1e-14);
  }
}

TEST(RefractionPayoff, SecondLevelErrorIsSmall) {
  const OptionSpec o = put_spec();
  const auto& r = ladders()[0];
  const PayoffCurve c =
      refraction_payoff(fixtures::bs_base(), o, ladder(2), 2, r.levels[0].solution.value);
  const double v1 = r.value(1, o.strike);
  const double se = c.extra_se[static_cast<std::size_t>(
      std::lround((o.log_strike() - c.grid.min) / c.grid.step()))];
  EXPECT_LE(se, 0.005 * v1);
  EXPECT_LT(c.escape_fraction, 0.01);
  EXPECT_FALSE(c.escape_warning);
}

TEST(SolveLevel, ZeroPayoffHasNoRegion) {
  const OptionSpec o = put_spec();
  const LevelSolution s = solve_level(fixtures::bs_base(), o, zero_extra(o, 0.0));
  EXPECT_EQ(s.regime, Regime::NoEarlyExercise);
  EXPECT_FALSE(s.u_star);
  for (double v : s.value) EXPECT_EQ(v, 0.0);
}

TEST(SolveLevel, FirstLevelMatchesClosedForm) {
  const OptionSpec o = put_spec();
  const LevelSolution s = solve_level(fixtures::bs_base(), o, zero_extra(o));
  EXPECT_EQ(s.regime, Regime::DoubleRegion);
  EXPECT_NEAR(*s.l_star, std::log(0.4), 1e-4);
  EXPECT_NEAR(*s.u_star, std::log(0.6), 1e-4);
  EXPECT_FALSE(s.edge_optimum);
}

TEST(Swing, SingleRightIsThePut) {
  for (const auto& m : models()) {
    for (double spot : {0.3, 0.5, 0.8, 1.5}) {
      const OptionSpec o = put_spec(fixtures::kQNeg, spot);
      const SwingResult r = solve_swing(m, o, ladder(1));
      const ValuationResult p = price_put(m, o);
      EXPECT_NEAR(r.value(1, spot), *p.price, 1e-6);
      EXPECT_NEAR(*r.levels[0].solution.l_star, *p.region.l_star, 1e-6);
      EXPECT_NEAR(*r.levels[0].solution.u_star, *p.region.u_star, 1e-6);
    }
  }
}

TEST(Swing, SingleRightPositiveRate) {
  const OptionSpec o = put_spec(fixtures::kQPos);
  const auto m = fixtures::bs_base_qpos();
  const SwingResult r = solve_swing(m, o, ladder(2));
  EXPECT_EQ(r.regime, Regime::SingleHalfLine);
  EXPECT_FALSE(r.levels[0].solution.l_star);
  EXPECT_NEAR(r.value(1, 0.8), *price_put(m, o).price, 1e-6);
  EXPECT_GE(r.value(2, 0.8), r.value(1, 0.8));
}

TEST(Swing, NestedIntervals) {
  for (const auto& r : ladders()) {
    for (std::size_t k = 1; k < r.levels.size(); ++k) {
      const SwingLevel& a = r.levels[k - 1];
      const SwingLevel& b = r.levels[k];
      EXPECT_LE(*b.solution.l_star, *a.solution.l_star + 3.0 * std::hypot(a.se_l, b.se_l))
          << "level " << b.k;
      EXPECT_GE(*b.solution.u_star, *a.solution.u_star - 3.0 * std::hypot(a.se_u, b.se_u))
          << "level " << b.k;
      EXPECT_FALSE(b.solution.edge_optimum);
    }
  }
}

TEST(Swing, MoreRightsNeverHurt) {
  for (const auto& r : ladders()) {
    for (std::size_t k = 1; k < r.levels.size(); ++k) {
      const auto& lo = r.levels[k - 1].solution.value;
      const auto& hi = r.levels[k].solution.value;
      for (std::size_t i = 0; i < lo.size(); ++i) {
        const double se = std::hypot(r.levels[k - 1].value_se[i], r.levels[k].value_se[i]);
        EXPECT_GE(hi[i], lo[i] - 3.0 * se) << "level " << k + 1 << " node " << i;
      }
    }
  }
}

// Non-increasing and convex in the asset price, to within the noise.
TEST(Swing, LevelsAreConvexAndNonIncreasing) {
  for (const auto& r : ladders()) {
    const auto x = r.grid.nodes();
    for (const auto& lv : r.levels) {
      const auto& v = lv.solution.value;
      const auto& se = lv.value_se;
      for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        const double tol = 3.0 * (se[i - 1] + 2.0 * se[i] + se[i + 1]) + 1e-9;
        const double s0 = std::exp(x[i - 1]), s1 = std::exp(x[i]), s2 = std::exp(x[i + 1]);
        const double left = (v[i] - v[i - 1]) / (s1 - s0);
        const double right = (v[i + 1] - v[i]) / (s2 - s1);
        EXPECT_GE(right - left, -tol / (s2 - s1)) << "level " << lv.k << " node " << i;
        EXPECT_LE(v[i + 1], v[i] + 3.0 * (se[i] + se[i + 1]) + 1e-12)
            << "level " << lv.k << " node " << i;
      }
    }
  }
}

TEST(Swing, StoppingOnTheFirstInterval) {
  for (const auto& r : ladders()) {
    const auto x = r.grid.nodes();
    const double l1 = *r.levels[0].solution.l_star, u1 = *r.levels[0].solution.u_star;
    for (const auto& lv : r.levels) {
      const CurveValuer cv(r.model, r.option, lv.payoff);
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < l1 || x[i] > u1) continue;
        EXPECT_LE(std::abs(lv.solution.value[i] - cv.payoff(x[i])), 3.0 * lv.value_se[i] + 1e-12);
      }
    }
  }
}

TEST(Swing, TwoRightsSandwich) {
  for (const auto& r : ladders()) {
    const double v1 = r.value(1, 1.0), v2 = r.value(2, 1.0);
    const auto& lv = r.levels[1];
    const double se = lv.value_se[static_cast<std::size_t>(
        std::lround((0.0 - r.grid.min) / r.grid.step()))];
    EXPECT_GE(v2, v1 - 3.0 * se);
    EXPECT_LE(v2, 2.0 * v1 + 3.0 * se);
  }
}

TEST(Swing, ExponentialRefraction) {
  SwingSpec s = ladder(3, 4000);
  s.refraction = Refraction::exponential(2.0);
  const SwingResult r = solve_swing(fixtures::jd_base(), put_spec(), s);
  for (std::size_t k = 1; k < r.levels.size(); ++k) {
    EXPECT_LE(*r.levels[k].solution.l_star,
              *r.levels[k - 1].solution.l_star + 3.0 * r.levels[k].se_l + 1e-9);
    EXPECT_GE(*r.levels[k].solution.u_star,
              *r.levels[k - 1].solution.u_star - 3.0 * r.levels[k].se_u - 1e-9);
    EXPECT_GT(r.value(k + 1, 0.8), r.value(k, 0.8));
  }
}

TEST(Swing, Deterministic) {
  const SwingSpec s = ladder(3, 4000);
  setenv("LEVY_OPTSTOP_THREADS", "3", 1);
  const SwingResult a = solve_swing(fixtures::jd_base(), put_spec(), s);
  setenv("LEVY_OPTSTOP_THREADS", "1", 1);
  const SwingResult b = solve_swing(fixtures::jd_base(), put_spec(), s);
  unsetenv("LEVY_OPTSTOP_THREADS");
  for (std::size_t k = 0; k < a.levels.size(); ++k) {
    EXPECT_EQ(*a.levels[k].solution.l_star, *b.levels[k].solution.l_star);
    EXPECT_EQ(*a.levels[k].solution.u_star, *b.levels[k].solution.u_star);
    EXPECT_EQ(a.levels[k].solution.value, b.levels[k].solution.value);
    EXPECT_EQ(a.levels[k].payoff.extra, b.levels[k].payoff.extra);
    EXPECT_EQ(a.levels[k].se_l, b.levels[k].se_l);
  }
}

TEST(Swing, Errors) {
  const auto bad = LevyModel::black_scholes(-0.05, fixtures::kSigma);
  try {
    solve_swing(bad, put_spec(), ladder(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FinitenessViolation);
  }
  OptionSpec call = put_spec();
  call.kind = OptionKind::Call;
  EXPECT_THROW(solve_swing(fixtures::bs_base(), call, ladder(2)), Error);
}
