#include "levy_optstop/levy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "levy_optstop/error.hpp"

namespace levy_optstop {

namespace {

constexpr double kPoleTol = 1e-12;
constexpr double kDiscTol = 1e-12;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::InvalidParameter, msg);
}

// Monic cubic x^3 + b x^2 + c x + d.
struct Cubic {
  double b, c, d;
  double operator()(double x) const { return ((x + b) * x + c) * x + d; }
  double slope(double x) const { return (3.0 * x + 2.0 * b) * x + c; }
};

double newton_polish(const Cubic& f, double x) {
  double fx = f(x);
  for (int it = 0; it < 4 && fx != 0.0; ++it) {
    const double s = f.slope(x);
    if (s == 0.0) break;
    const double next = x - fx / s;
    const double fn = f(next);
    if (!(std::abs(fn) < std::abs(fx))) break;
    x = next;
    fx = fn;
  }
  return x;
}

double bisect(const Cubic& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Root below x0 where f(x0) >= 0 (f -> -inf to the left).
double root_left_of(const Cubic& f, double x0) {
  double step = 1.0;
  double lo = x0 - step;
  while (f(lo) >= 0.0) {
    step *= 2.0;
    lo = x0 - step;
  }
  return bisect(f, lo, x0);
}

double root_right_of(const Cubic& f, double x0) {
  double step = 1.0;
  double hi = x0 + step;
  while (f(hi) <= 0.0) {
    step *= 2.0;
    hi = x0 + step;
  }
  return bisect(f, x0, hi);
}

// Bracketing through the critical points, for near-zero discriminants.
std::vector<double> cubic_roots_bracketed(const Cubic& f, bool& all_real) {
  const double g = f.b * f.b - 3.0 * f.c;
  if (g <= 0.0) {
    all_real = g == 0.0 && f(-f.b / 3.0) == 0.0;
    const double x0 = -f.b / 3.0;
    const double r = f(x0) >= 0.0 ? root_left_of(f, x0) : root_right_of(f, x0);
    return all_real ? std::vector<double>{r, r, r} : std::vector<double>{r};
  }
  const double sg = std::sqrt(g);
  const double x1 = (-f.b - sg) / 3.0;  // local max
  const double x2 = (-f.b + sg) / 3.0;  // local min
  const double f1 = f(x1), f2 = f(x2);
  if (f1 >= 0.0 && f2 <= 0.0) {
    all_real = true;
    return {root_right_of(f, x2), bisect(f, x1, x2), root_left_of(f, x1)};
  }
  all_real = false;
  return {f1 < 0.0 ? root_right_of(f, x2) : root_left_of(f, x1)};
}

std::vector<double> cubic_roots(const Cubic& f, bool& all_real) {
  const double shift = f.b / 3.0;
  const double p = f.c - f.b * f.b / 3.0;
  const double r = 2.0 * f.b * f.b * f.b / 27.0 - f.b * f.c / 3.0 + f.d;
  const double scale = 4.0 * std::abs(p * p * p) + 27.0 * r * r;
  const double disc = -(4.0 * p * p * p + 27.0 * r * r);
  if (scale == 0.0 || std::abs(disc) <= kDiscTol * scale) {
    return cubic_roots_bracketed(f, all_real);
  }
  std::vector<double> roots;
  if (disc > 0.0) {
    all_real = true;
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg =
        std::clamp(3.0 * r / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      const double t = m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0);
      roots.push_back(newton_polish(f, t - shift));
    }
  } else {
    all_real = false;
    const double s = std::sqrt(r * r / 4.0 + p * p * p / 27.0);
    const double t = std::cbrt(-r / 2.0 + s) + std::cbrt(-r / 2.0 - s);
    roots.push_back(newton_polish(f, t - shift));
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

}  // namespace

LevyModel LevyModel::black_scholes(double mu, double sigma) {
  LevyModel m;
  m.family = Family::BlackScholes;
  m.mu = mu;
  m.sigma = sigma;
  m.validate();
  return m;
}

LevyModel LevyModel::exp_jump_diffusion(double mu, double sigma, double lambda,
                                        double rho, JumpSign sign) {
  LevyModel m;
  m.family = Family::ExpJumpDiffusion;
  m.mu = mu;
  m.sigma = sigma;
  m.lambda = lambda;
  m.rho = rho;
  m.jump_sign = sign;
  m.validate();
  return m;
}

void LevyModel::validate() const {
  require(std::isfinite(mu), "drift mu must be finite");
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be > 0");
  if (family == Family::BlackScholes) {
    require(lambda == 0.0, "Black-Scholes model must have lambda = 0");
    require(jump_sign == JumpSign::SpectrallyNegative,
            "Black-Scholes model is stored spectrally negative");
  } else {
    require(std::isfinite(lambda) && lambda > 0.0,
            "jump-diffusion requires lambda > 0");
    require(std::isfinite(rho) && rho > 0.0, "jump-diffusion requires rho > 0");
  }
}

LevyModel LevyModel::reflected() const {
  LevyModel m = *this;
  m.mu = -mu;
  if (family == Family::ExpJumpDiffusion) {
    m.jump_sign = spectrally_negative() ? JumpSign::SpectrallyPositive
                                        : JumpSign::SpectrallyNegative;
  }
  return m;
}

LevyModel scale_driver(const LevyModel& model) {
  return model.spectrally_negative() ? model : model.reflected();
}

double implied_drift(Family family, double sigma, double lambda, double rho,
                     double q, double delta, JumpSign sign) {
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be > 0");
  require(std::isfinite(q) && std::isfinite(delta), "q and delta must be finite");
  const double base = q - delta - 0.5 * sigma * sigma;
  if (family == Family::BlackScholes) return base;
  require(lambda >= 0.0, "lambda must be >= 0");
  require(rho > 0.0, "rho must be > 0");
  if (sign == JumpSign::SpectrallyNegative) {
    return base - lambda * rho / (1.0 + rho) + lambda;
  }
  require(rho > 1.0, "upward exponential jumps need rho > 1 for E[e^X] < inf");
  return base - lambda * rho / (rho - 1.0) + lambda;
}

double laplace_exponent(const LevyModel& model, double phi) {
  const double k = 0.5 * model.sigma * model.sigma;
  double value = model.mu * phi + k * phi * phi;
  if (!model.has_jumps()) return value;
  // Jump part of E e^{phi X_1}: lambda rho / (rho + phi) downward,
  // lambda rho / (rho - phi) upward.
  const double denom =
      model.spectrally_negative() ? model.rho + phi : model.rho - phi;
  if (std::abs(denom) < kPoleTol) {
    throw Error(ErrorKind::PoleProximity,
                "laplace exponent evaluated at the jump pole");
  }
  if (phi == 0.0) return 0.0;
  return value + model.lambda * model.rho / denom - model.lambda;
}

double laplace_exponent_derivative(const LevyModel& model, double phi) {
  double value = model.mu + model.sigma * model.sigma * phi;
  if (!model.has_jumps()) return value;
  const double denom =
      model.spectrally_negative() ? model.rho + phi : model.rho - phi;
  if (std::abs(denom) < kPoleTol) {
    throw Error(ErrorKind::PoleProximity,
                "laplace exponent derivative evaluated at the jump pole");
  }
  const double jump = model.lambda * model.rho / (denom * denom);
  return model.spectrally_negative() ? value - jump : value + jump;
}

double mean_increment(const LevyModel& model) {
  if (!model.has_jumps()) return model.mu;
  const double jm = model.lambda / model.rho;
  return model.spectrally_negative() ? model.mu - jm : model.mu + jm;
}

RootSet psi_equation_roots(const LevyModel& model, double q) {
  const LevyModel m = scale_driver(model);
  const double k = 0.5 * m.sigma * m.sigma;
  RootSet out;
  if (!m.has_jumps()) {
    const double disc = m.mu * m.mu + 2.0 * q * m.sigma * m.sigma;
    const double scale = std::max(m.mu * m.mu, 2.0 * std::abs(q) * m.sigma * m.sigma);
    double root = 0.0;
    if (std::abs(disc) <= kDiscTol * scale) {
      root = 0.0;
    } else if (disc < 0.0) {
      return out;
    } else {
      root = std::sqrt(disc);
    }
    out.all_real = true;
    const double s2 = m.sigma * m.sigma;
    out.phi_q = (-m.mu + root) / s2;
    out.negative_roots.push_back((-m.mu - root) / s2);
    return out;
  }
  // (phi + rho)(psi(phi) - q) = k phi^3 + (mu + k rho) phi^2
  //                            + (mu rho - lambda - q) phi - q rho
  const Cubic f{(m.mu + k * m.rho) / k, (m.mu * m.rho - m.lambda - q) / k,
                -q * m.rho / k};
  bool all_real = false;
  std::vector<double> roots = cubic_roots(f, all_real);
  out.all_real = all_real;
  if (all_real && roots.front() > -m.rho) {
    out.phi_q = roots.front();
    out.negative_roots.assign(roots.begin() + 1, roots.end());
  } else {
    out.negative_roots = roots;
  }
  return out;
}

std::optional<double> phi_right_inverse(const LevyModel& model, double q) {
  return psi_equation_roots(model, q).phi_q;
}

}  // namespace levy_optstop
