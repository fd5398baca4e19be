#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "levy_optstop/error.hpp"
#include "levy_optstop/scale.hpp"

using namespace levy_optstop;

namespace {

std::vector<double> jd_oracle_roots(const oracle::JdParams& p, double q) {
  auto r = oracle::roots_right_of_pole(p, q);
  auto g = oracle::gsl_cubic_roots(p, q);
  r.push_back(g.back());
  return r;
}

}  // namespace

TEST(ScaleEval, NegativeArgumentIsZero) {
  for (const auto& m : {fixtures::bs_base(), fixtures::jd_base()}) {
    const ScaleEval s = scale_eval(m, -0.01, -1.0);
    EXPECT_EQ(s.w, 0.0);
    EXPECT_EQ(s.w_prime, 0.0);
    EXPECT_EQ(s.w_double_prime, 0.0);
  }
}

TEST(ScaleEval, BlackScholesClosedForm) {
  const auto m = fixtures::bs_base();
  const ScaleEval s1 = scale_eval(m, -0.01, 1.0);
  EXPECT_NEAR(s1.w, 200.0 * std::exp(-0.75) * std::sinh(0.25), 1e-12);
  const ScaleEval s0 = scale_eval(m, -0.01, 1e-12);
  EXPECT_NEAR(s0.w, 0.0, 1e-9);
  EXPECT_NEAR(s0.w_prime, 50.0, 1e-8);
  for (double x = 0.05; x < 10; x += 0.37) {
    EXPECT_NEAR(scale_eval(m, -0.01, x).w, oracle::scale_w_bs(0.03, 0.2, -0.01, x), 1e-12);
  }
}

TEST(ScaleEval, BlackScholesDegenerateLimit) {
  // mu^2 + 2 q sigma^2 = 0: double root, W = (2x/sigma^2) e^{-mu x/sigma^2}
  const auto m = LevyModel::black_scholes(0.02, 0.2);
  const double q = -0.02 * 0.02 / (2 * 0.04);
  for (double x : {0.1, 0.7, 3.0}) {
    const ScaleEval s = scale_eval(m, q, x);
    const double want = 2 * x / 0.04 * std::exp(-0.02 * x / 0.04);
    EXPECT_NEAR(s.w, want, 1e-9 * want);
    const double wp = (2 / 0.04) * std::exp(-0.5 * x) * (1 - 0.5 * x);
    EXPECT_NEAR(s.w_prime, wp, 1e-9 * std::max(1.0, std::abs(wp)));
  }
}

TEST(ScaleEval, JumpDiffusionAgainstOracle) {
  const auto p = fixtures::jd_params();
  for (double q : {-0.01, 0.01}) {
    const auto roots = jd_oracle_roots(p, q);
    for (double x = 0.0; x < 20.0; x += 0.5) {
      const double want = oracle::scale_w(p, roots, x);
      EXPECT_NEAR(scale_eval(fixtures::jd_base(), q, x).w, want, 1e-10 * std::max(1.0, want));
    }
  }
  EXPECT_NEAR(scale_eval(fixtures::jd_base(), -0.01, 0.0).w, 0.0, 1e-12);
  EXPECT_NEAR(scale_eval(fixtures::jd_base(), -0.01, 0.0).w_prime, 50.0, 1e-9);
}

TEST(ScaleEval, DerivativeConsistency) {
  const double h = 1e-5;
  for (const auto& m : {fixtures::bs_base(), fixtures::jd_base(),
                        fixtures::jd_base(JumpSign::SpectrallyPositive)}) {
    const ScaleFunction w(m, -0.01);
    for (int i = 1; i <= 100; ++i) {
      const double x = 0.1 * i;
      const ScaleEval s = w.eval(x);
      const double fd1 = (w.eval(x + h).w - w.eval(x - h).w) / (2 * h);
      const double fd2 = (w.eval(x + h).w_prime - w.eval(x - h).w_prime) / (2 * h);
      EXPECT_NEAR(s.w_prime, fd1, 1e-6 * std::max(1.0, std::abs(s.w_prime)));
      EXPECT_NEAR(s.w_double_prime, fd2, 1e-6 * std::max(1.0, std::abs(s.w_double_prime)));
    }
  }
}

TEST(ScaleEval, StrictlyIncreasingForNonnegativeRate) {
  for (const auto& m : {fixtures::bs_base_qpos(), fixtures::jd_base()}) {
    for (double q : {0.0, 0.01}) {
      const ScaleFunction w(m, q);
      double prev = 0.0;
      for (int i = 1; i <= 100; ++i) {
        const double cur = w.eval(0.1 * i).w;
        EXPECT_GT(cur, prev);
        prev = cur;
      }
    }
  }
}

TEST(ScaleEval, NegativeRateIncreasesOnlyUpToPeak) {
  // For q < 0 both exponents are negative and W rises then decays; the peak
  // of (e^{-x/2} - e^{-x}) sits at x = 2 log 2.
  const ScaleFunction w(fixtures::bs_base(), -0.01);
  const double peak = 2.0 * std::log(2.0);
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double x = peak * i / 100.0;
    const double cur = w.eval(x).w;
    EXPECT_GT(cur, prev);
    EXPECT_GT(cur, 0.0);
    prev = cur;
  }
  EXPECT_NEAR(w.eval(peak).w_prime, 0.0, 1e-12);
  EXPECT_LT(w.eval(peak + 1.0).w, w.eval(peak).w);
  EXPECT_GT(w.eval(40.0).w, 0.0);
}

TEST(ScaleEval, JumpDiffusionSmallIntensityMatchesBlackScholes) {
  const auto bs = LevyModel::black_scholes(0.06, 0.2);
  const auto jd = LevyModel::exp_jump_diffusion(0.06, 0.2, 1e-12, 7.5);
  for (double q : {-0.01, 0.01}) {
    const ScaleFunction a(bs, q), b(jd, q);
    for (int i = 1; i <= 100; ++i) {
      const double x = 0.1 * i;
      EXPECT_NEAR(b.eval(x).w, a.eval(x).w, 1e-6 * a.eval(x).w);
      EXPECT_NEAR(b.eval(x).w_prime, a.eval(x).w_prime, 1e-6 * std::abs(a.eval(x).w_prime) + 1e-9);
    }
  }
}

TEST(ScaleEval, NearlyMergedRootsStayContinuous) {
  // q just above the bottom of psi: Phi and the second root are ~1e-7 apart,
  // the sum over simple roots must still be the continuous limit.
  const auto p = fixtures::jd_params();
  double a = -7.0, b = 0.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 200; ++i) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (oracle::psi_down(p, c) < oracle::psi_down(p, d)) b = d; else a = c;
  }
  const double qmin = oracle::psi_down(p, 0.5 * (a + b));
  const ScaleFunction near(fixtures::jd_base(), qmin + 1e-16);
  const ScaleFunction apart(fixtures::jd_base(), qmin + 1e-9);
  ASSERT_LT(near.roots()[0] - near.roots()[1], 1e-6);
  for (double x : {0.3, 1.0, 4.0, 12.0}) {
    const ScaleEval s = near.eval(x), t = apart.eval(x);
    EXPECT_NEAR(s.w, t.w, 1e-4 * t.w);
    EXPECT_NEAR(s.w_prime, t.w_prime, 1e-4 * std::abs(t.w_prime) + 1e-6);
  }
}

TEST(ScaleEval, MissingPhi) {
  try {
    scale_eval(fixtures::bs_base(), -0.02, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingPhi);
  }
  EXPECT_THROW(scale_eval(fixtures::jd_base(), -0.02, 1.0), Error);
}

TEST(Resolvent, Identities) {
  for (const auto& m : {fixtures::bs_base(), fixtures::jd_base()}) {
    EXPECT_NEAR(resolvent_density(m, -0.01, 0.8, 0.0), 0.0, 1e-14);
    EXPECT_EQ(resolvent_density(m, -0.01, 0.0, 0.4), 0.0);
  }
  const auto m = fixtures::bs_base();
  const double want = std::exp(0.1) * scale_eval(m, -0.01, 0.5).w - scale_eval(m, -0.01, 0.3).w;
  EXPECT_NEAR(resolvent_density(m, -0.01, 0.5, 0.2), want, 1e-14);
  EXPECT_NEAR(want, std::exp(0.1) * oracle::scale_w_bs(0.03, 0.2, -0.01, 0.5) -
                        oracle::scale_w_bs(0.03, 0.2, -0.01, 0.3),
              1e-12);
  EXPECT_THROW(resolvent_density(m, -0.01, -0.1, 0.2), Error);
}

TEST(LaplaceIdentity, BothFixtures) {
  for (const auto& m : {fixtures::bs_base(), fixtures::jd_base()}) {
    const double phi = *phi_right_inverse(m, -0.01);
    for (double d : {0.25, 0.5, 1.0, 2.5, 5.0}) {
      EXPECT_LE(laplace_identity_residual(m, -0.01, phi + d), 1e-8) << d;
    }
    EXPECT_LE(laplace_identity_residual(m, -0.01, phi + 10.0), 1e-10);
  }
  EXPECT_LE(laplace_identity_residual(fixtures::bs_base(), -0.01, 1.0), 1e-8);
  EXPECT_LE(laplace_identity_residual(fixtures::jd_base(), -0.01, 2.0), 1e-8);
  EXPECT_THROW(laplace_identity_residual(fixtures::bs_base(), -0.01, -0.5), Error);
}
