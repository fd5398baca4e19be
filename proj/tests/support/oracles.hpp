#pragma once

// Independent reference computations used only by the tests. They are written
// from the defining formulas and do not call into the library's solvers.

#include <functional>
#include <vector>

namespace oracle {

struct JdParams {
  double mu, sigma, lambda, rho;
};

// psi of the downward-jump model, straight from the Levy-Khintchine form.
double psi_down(const JdParams& p, double phi);
double psi_down_prime(const JdParams& p, double phi);

double bisect(const std::function<double(double)>& f, double lo, double hi);

// Roots of psi_down = q in (-rho, inf), by locating the minimum of psi with
// golden section and bisecting on each side. Descending; empty if none.
std::vector<double> roots_right_of_pole(const JdParams& p, double q);

// Real roots of the cleared cubic from gsl_poly_solve_cubic, descending.
std::vector<double> gsl_cubic_roots(const JdParams& p, double q);

// W^(q) of the downward-jump model as sum e^{theta x}/psi'(theta), using the
// three roots provided (third root left of the pole).
double scale_w(const JdParams& p, const std::vector<double>& roots, double x);

// Black-Scholes scale function in the sinh form.
double scale_w_bs(double mu, double sigma, double q, double x);

// Perpetual call entrance value for [l, u] with log K < l, written for a
// downward-jump model (or Black-Scholes when lambda == 0) from the call form
// of the entrance identity.
double call_entrance_value(const JdParams& p, double q, double strike,
                           double l, double u, double x);

// Direct maximisation of call_entrance_value over log K < l <= u; returns
// {l*, u*}.
std::pair<double, double> call_boundaries_direct(const JdParams& p, double q,
                                                 double strike);

}  // namespace oracle
