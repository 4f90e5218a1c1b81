#pragma once

#include <functional>

namespace renv::num {

struct QuadResult {
  double value = 0;
  double error = 0;    // estimated absolute error
  long evals = 0;
  bool converged = false;
};

// Adaptive Simpson with Richardson correction. Integrands are assumed
// finite on [a, b].
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, int max_depth = 52);

// Throws std::runtime_error naming the achieved tolerance when the
// refinement budget is exhausted.
double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth = 52);

// Iterated integral of f(z, x) over [za, zb] x [xa, xb]; inner integral in x.
QuadResult integrate2d(const std::function<double(double, double)>& f, double za,
                       double zb, double xa, double xb, double abs_tol);

double integrate2d_or_throw(const std::function<double(double, double)>& f, double za,
                            double zb, double xa, double xb, double abs_tol);

struct ImproperResult {
  bool finite = false;
  double value = 0;
};

// Windowed integral of g over [lo, inf); divergence is flagged when the
// window contributions stop decaying or overflow.
ImproperResult integrate_halfline(const std::function<double(double)>& g, double lo,
                                  double window = 5.0, double tol = 1e-10,
                                  int max_windows = 400);

// Whole line via two half-line sweeps from 0.
ImproperResult integrate_line(const std::function<double(double)>& g, double tol = 1e-10);

// Central finite differences.
double deriv1(const std::function<double(double)>& f, double x, double h);
double deriv2(const std::function<double(double)>& f, double x, double h);

// Modified Bessel function of the first kind, real order q > -1, y >= 0,
// by the ascending power series with term-ratio stopping (relative
// tolerance 1e-12). Throws when the term budget is exhausted.
double bessel_i(double q, double y);

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x)/Gamma(a).
double gamma_q(double a, double x);

// Standard normal CDF.
double normal_cdf(double x);

}  // namespace renv::num
