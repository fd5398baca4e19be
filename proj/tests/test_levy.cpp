#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "levy_optstop/error.hpp"
#include "levy_optstop/levy.hpp"

using namespace levy_optstop;

TEST(ImpliedDrift, BlackScholesCases) {
  EXPECT_NEAR(implied_drift(Family::BlackScholes, 0.2, 0, 0, -0.01, -0.06), 0.03, 1e-15);
  EXPECT_NEAR(implied_drift(Family::BlackScholes, 0.2, 0, 0, 0.01, -0.06), 0.05, 1e-15);
}

TEST(ImpliedDrift, ZeroIntensityMatchesBlackScholes) {
  const double bs = implied_drift(Family::BlackScholes, 0.3, 0, 0, 0.02, 0.01);
  EXPECT_EQ(implied_drift(Family::ExpJumpDiffusion, 0.3, 0.0, 4.0, 0.02, 0.01), bs);
  EXPECT_EQ(implied_drift(Family::ExpJumpDiffusion, 0.3, 0.0, 4.0, 0.02, 0.01,
                          JumpSign::SpectrallyPositive),
            bs);
}

TEST(ImpliedDrift, RoundTripMartingaleCondition) {
  for (double q : {-0.03, -0.01, 0.0, 0.02}) {
    for (double delta : {-0.06, 0.0, 0.03}) {
      const double mb = implied_drift(Family::BlackScholes, 0.25, 0, 0, q, delta);
      EXPECT_NEAR(laplace_exponent(LevyModel::black_scholes(mb, 0.25), 1.0), q - delta, 1e-14);
      for (auto s : {JumpSign::SpectrallyNegative, JumpSign::SpectrallyPositive}) {
        const double mj = implied_drift(Family::ExpJumpDiffusion, 0.25, 0.3, 6.0, q, delta, s);
        const auto m = LevyModel::exp_jump_diffusion(mj, 0.25, 0.3, 6.0, s);
        EXPECT_NEAR(laplace_exponent(m, 1.0), q - delta, 1e-14);
      }
    }
  }
}

TEST(ImpliedDrift, RejectsBadInput) {
  EXPECT_THROW(implied_drift(Family::BlackScholes, 0.0, 0, 0, 0.0, 0.0), Error);
  EXPECT_THROW(implied_drift(Family::ExpJumpDiffusion, 0.2, 0.1, 0.5, 0.0, 0.0,
                             JumpSign::SpectrallyPositive),
               Error);
}

TEST(Model, ConstructionInvariants) {
  EXPECT_THROW(LevyModel::black_scholes(0.0, 0.0), Error);
  EXPECT_THROW(LevyModel::exp_jump_diffusion(0.0, 0.2, 0.0, 1.0), Error);
  EXPECT_THROW(LevyModel::exp_jump_diffusion(0.0, 0.2, 0.1, -1.0), Error);
  const auto bs = LevyModel::black_scholes(0.01, 0.2);
  EXPECT_EQ(bs.jump_sign, JumpSign::SpectrallyNegative);
  EXPECT_EQ(bs.lambda, 0.0);
}

TEST(LaplaceExponent, Examples) {
  EXPECT_EQ(laplace_exponent(fixtures::bs_base(), 0.0), 0.0);
  EXPECT_EQ(laplace_exponent(fixtures::jd_base(), 0.0), 0.0);
  EXPECT_EQ(laplace_exponent(fixtures::jd_base(JumpSign::SpectrallyPositive), 0.0), 0.0);
  EXPECT_NEAR(laplace_exponent(fixtures::bs_base(), 1.0), 0.05, 1e-16);
  EXPECT_NEAR(laplace_exponent(fixtures::jd_base(), 1.0), 0.06 + 0.02 + 1.5 / 8.5 - 0.2, 1e-15);
  EXPECT_NEAR(laplace_exponent(fixtures::jd_base(), 1.0), 0.0564706, 1e-7);
}

TEST(LaplaceExponent, PoleProximity) {
  try {
    laplace_exponent(fixtures::jd_base(), -7.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PoleProximity);
  }
  EXPECT_THROW(laplace_exponent(fixtures::jd_base(JumpSign::SpectrallyPositive), 7.5), Error);
}

TEST(LaplaceExponent, Derivative) {
  EXPECT_NEAR(laplace_exponent_derivative(fixtures::bs_base(), 0.0), 0.03, 1e-16);
  EXPECT_NEAR(laplace_exponent_derivative(fixtures::jd_base(), 0.0), 0.06 - 0.2 / 7.5, 1e-15);
  const double h = 1e-5;
  for (const auto& m : {fixtures::bs_base(), fixtures::jd_base(),
                        fixtures::jd_base(JumpSign::SpectrallyPositive)}) {
    for (double phi : {-0.5, 0.5, 2.0}) {
      const double fd = (laplace_exponent(m, phi + h) - laplace_exponent(m, phi - h)) / (2 * h);
      EXPECT_NEAR(laplace_exponent_derivative(m, phi), fd, 1e-6);
    }
  }
}

TEST(LaplaceExponent, StrictlyConvex) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-7.4, 6.0);
  for (const auto& m : {fixtures::bs_base(), fixtures::jd_base()}) {
    for (int i = 0; i < 500; ++i) {
      double a = u(rng), b = u(rng), c = u(rng);
      if (a > b) std::swap(a, b);
      if (b > c) std::swap(b, c);
      if (a > b) std::swap(a, b);
      if (c - a < 1e-3 || b - a < 1e-4 || c - b < 1e-4) continue;
      const double t = (b - a) / (c - a);
      const double chord = (1 - t) * laplace_exponent(m, a) + t * laplace_exponent(m, c);
      EXPECT_LT(laplace_exponent(m, b), chord);
    }
  }
}

TEST(LaplaceExponent, ReflectionConsistency) {
  const auto pos = fixtures::jd_base(JumpSign::SpectrallyPositive);
  const auto ref = pos.reflected();
  EXPECT_TRUE(ref.spectrally_negative());
  for (double phi = -5.0; phi <= 5.0; phi += 0.25) {
    EXPECT_NEAR(laplace_exponent(pos, phi), laplace_exponent(ref, -phi), 1e-16);
  }
}

TEST(RightInverse, BlackScholesClosedForm) {
  const auto phi = phi_right_inverse(fixtures::bs_base(), -0.01);
  ASSERT_TRUE(phi);
  EXPECT_NEAR(*phi, -0.5, 1e-14);
  EXPECT_FALSE(phi_right_inverse(fixtures::bs_base(), -0.02));
  const auto pos = phi_right_inverse(fixtures::bs_base_qpos(), 0.01);
  ASSERT_TRUE(pos);
  EXPECT_NEAR(*pos, -0.05 / 0.04 + std::sqrt(0.0025 + 0.0008) / 0.04, 1e-13);
}

TEST(RightInverse, JumpDiffusionAgainstOracles) {
  const auto p = fixtures::jd_params();
  for (double q : {-0.011, -0.01, -0.005, 0.0, 0.01, 0.5}) {
    const auto phi = phi_right_inverse(fixtures::jd_base(), q);
    ASSERT_TRUE(phi) << q;
    const auto ref = oracle::roots_right_of_pole(p, q);
    ASSERT_EQ(ref.size(), 2u);
    EXPECT_NEAR(*phi, ref[0], 1e-11) << q;
    EXPECT_LE(std::abs(laplace_exponent(fixtures::jd_base(), *phi) - q),
              1e-12 * std::max(1.0, std::abs(q)));
    EXPECT_GT(*phi + 7.5, 0.0);
    const auto gsl = oracle::gsl_cubic_roots(p, q);
    EXPECT_NEAR(*phi, gsl[0], 1e-9);
    if (q < 0) {
      EXPECT_LT(*phi, 0.0);
      EXPECT_GT(*phi, -7.5);
    }
  }
}

TEST(Roots, BlackScholesQuadratic) {
  const RootSet rs = psi_equation_roots(fixtures::bs_base(), -0.01);
  EXPECT_TRUE(rs.all_real);
  ASSERT_TRUE(rs.phi_q);
  EXPECT_NEAR(*rs.phi_q, -0.5, 1e-14);
  ASSERT_EQ(rs.negative_roots.size(), 1u);
  EXPECT_NEAR(rs.negative_roots[0], -1.0, 1e-14);
}

TEST(Roots, JumpDiffusionCubic) {
  const auto m = fixtures::jd_base();
  const double q = -0.01;
  const RootSet rs = psi_equation_roots(m, q);
  ASSERT_TRUE(rs.all_real);
  ASSERT_TRUE(rs.phi_q);
  ASSERT_EQ(rs.negative_roots.size(), 2u);
  std::vector<double> all{*rs.phi_q, rs.negative_roots[0], rs.negative_roots[1]};
  for (double r : all) EXPECT_LE(std::abs(laplace_exponent(m, r) - q), 1e-10);
  EXPECT_GT(rs.negative_roots[0], -7.5);
  EXPECT_LT(rs.negative_roots[1], -7.5);
  // Vieta on k phi^3 + (mu + k rho) phi^2 + (mu rho - lambda - q) phi - q rho
  const double k = 0.02;
  const double sum = all[0] + all[1] + all[2];
  const double prod = all[0] * all[1] * all[2];
  const double want_sum = -(0.06 + k * 7.5) / k;
  const double want_prod = q * 7.5 / k;
  EXPECT_LE(std::abs(sum - want_sum), 1e-9 * std::abs(want_sum));
  EXPECT_LE(std::abs(prod - want_prod), 1e-9 * std::abs(want_prod));
  const auto gsl = oracle::gsl_cubic_roots(fixtures::jd_params(), q);
  ASSERT_EQ(gsl.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(all[i], gsl[i], 1e-9);
}

namespace {

// First q on a downward scan (step 1e-5 from -0.01) where the oracle finds no
// root right of the pole.
double oracle_flip_q() {
  const auto p = fixtures::jd_params();
  for (int i = 0;; ++i) {
    const double q = -0.01 - 1e-5 * i;
    if (oracle::roots_right_of_pole(p, q).empty()) return q;
  }
}

}  // namespace

TEST(Roots, DiscriminantFlip) {
  const double q_flip = oracle_flip_q();
  EXPECT_NEAR(q_flip, -0.01162, 1e-12);  // regression fixture
  const RootSet below = psi_equation_roots(fixtures::jd_base(), q_flip);
  EXPECT_FALSE(below.all_real);
  EXPECT_FALSE(below.phi_q);
  ASSERT_EQ(below.negative_roots.size(), 1u);
  EXPECT_LT(below.negative_roots[0], -7.5);
  const RootSet above = psi_equation_roots(fixtures::jd_base(), q_flip + 1e-5);
  EXPECT_TRUE(above.all_real);
  EXPECT_TRUE(above.phi_q);
}

TEST(Roots, NearDoubleRootStaysAccurate) {
  const auto p = fixtures::jd_params();
  // minimum of psi on (-rho, inf) by golden section
  double a = -7.0, b = 0.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 200; ++i) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (oracle::psi_down(p, c) < oracle::psi_down(p, d)) b = d; else a = c;
  }
  const double m = 0.5 * (a + b);
  const double qmin = oracle::psi_down(p, m);
  for (double eps : {1e-9, 1e-12, 1e-14}) {
    const RootSet rs = psi_equation_roots(fixtures::jd_base(), qmin + eps);
    ASSERT_TRUE(rs.all_real) << eps;
    ASSERT_TRUE(rs.phi_q);
    EXPECT_NEAR(*rs.phi_q, m, 1e-3);
    EXPECT_NEAR(rs.negative_roots[0], m, 1e-3);
    EXPECT_LE(std::abs(laplace_exponent(fixtures::jd_base(), *rs.phi_q) - qmin - eps), 1e-12);
  }
}

TEST(Roots, SpectrallyPositiveUsesReflectedDriver) {
  const auto pos = fixtures::jd_base(JumpSign::SpectrallyPositive);
  const auto drv = scale_driver(pos);
  EXPECT_TRUE(drv.spectrally_negative());
  EXPECT_EQ(drv.mu, -0.06);
  const RootSet a = psi_equation_roots(pos, -0.01);
  const RootSet b = psi_equation_roots(drv, -0.01);
  ASSERT_TRUE(a.phi_q && b.phi_q);
  EXPECT_EQ(*a.phi_q, *b.phi_q);
  EXPECT_NEAR(laplace_exponent(pos, -*a.phi_q), -0.01, 1e-12);
}

TEST(MeanIncrement, Orientation) {
  EXPECT_NEAR(mean_increment(fixtures::jd_base()), 0.06 - 0.2 / 7.5, 1e-16);
  EXPECT_NEAR(mean_increment(fixtures::jd_base(JumpSign::SpectrallyPositive)), 0.06 + 0.2 / 7.5,
              1e-16);
}
