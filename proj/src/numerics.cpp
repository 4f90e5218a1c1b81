#include "renv/numerics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace renv::num {

namespace {

struct SimpsonCtx {
  const std::function<double(double)>* f;
  long evals = 0;
  long budget = 2'000'000;
  bool converged = true;
};

double eval(SimpsonCtx& ctx, double x) {
  ++ctx.evals;
  return (*ctx.f)(x);
}

// One adaptive interval: fa/fm/fb already evaluated, whole = Simpson on [a,b].
double adapt(SimpsonCtx& ctx, double a, double b, double fa, double fm, double fb,
             double whole, double tol, int depth, double& err_acc) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = eval(ctx, lm), frm = eval(ctx, rm);
  const double h6 = (b - a) / 12.0;
  const double left = h6 * (fa + 4.0 * flm + fm);
  const double right = h6 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (!std::isfinite(delta)) {
    ctx.converged = false;
    return left + right;
  }
  if (depth <= 0 || ctx.evals > ctx.budget) {
    if (std::abs(delta) > 15.0 * tol) ctx.converged = false;
    err_acc += std::abs(delta);
    return left + right + delta / 15.0;
  }
  if (std::abs(delta) <= 15.0 * tol) {
    err_acc += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return adapt(ctx, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err_acc) +
         adapt(ctx, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err_acc);
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, int max_depth) {
  QuadResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  // Uniform pre-split so narrow features cannot hide between the first
  // probes of the adaptive rule.
  constexpr int panels = 16;
  SimpsonCtx ctx{&f};
  double err = 0, total = 0;
  const double h = (b - a) / panels;
  double left_x = a, left_f = eval(ctx, a);
  for (int p = 0; p < panels; ++p) {
    const double right_x = (p == panels - 1) ? b : a + (p + 1) * h;
    const double mid_x = 0.5 * (left_x + right_x);
    const double fm = eval(ctx, mid_x);
    const double fb = eval(ctx, right_x);
    const double whole = (right_x - left_x) / 6.0 * (left_f + 4.0 * fm + fb);
    total += adapt(ctx, left_x, right_x, left_f, fm, fb, whole, abs_tol / panels,
                   max_depth, err);
    left_x = right_x;
    left_f = fb;
  }
  out.value = total;
  out.error = err;
  out.evals = ctx.evals;
  out.converged = ctx.converged;
  if (!std::isfinite(out.value)) out.converged = false;
  return out;
}

double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth) {
  const QuadResult r = integrate(f, a, b, abs_tol, max_depth);
  if (!r.converged)
    throw std::runtime_error("quadrature did not converge; achieved tolerance " +
                             std::to_string(r.error));
  return r.value;
}

QuadResult integrate2d(const std::function<double(double, double)>& f, double za,
                       double zb, double xa, double xb, double abs_tol) {
  // Inner tolerance split so the outer integral of inner errors stays
  // below abs_tol even when every panel hits its budget.
  const double inner_tol = abs_tol / (4.0 * std::max(1.0, std::abs(zb - za)));
  long inner_evals = 0;
  bool inner_ok = true;
  auto outer = [&](double z) {
    QuadResult r = integrate([&](double x) { return f(z, x); }, xa, xb, inner_tol);
    inner_evals += r.evals;
    inner_ok = inner_ok && r.converged;
    return r.value;
  };
  QuadResult out = integrate(outer, za, zb, 0.5 * abs_tol);
  out.evals += inner_evals;
  out.converged = out.converged && inner_ok;
  return out;
}

double integrate2d_or_throw(const std::function<double(double, double)>& f, double za,
                            double zb, double xa, double xb, double abs_tol) {
  const QuadResult r = integrate2d(f, za, zb, xa, xb, abs_tol);
  if (!r.converged)
    throw std::runtime_error("2-d quadrature did not converge; achieved tolerance " +
                             std::to_string(r.error));
  return r.value;
}

// Windowed integral of g over [lo, inf). Divergence is flagged when the
// window contributions stop decaying.
ImproperResult integrate_halfline(const std::function<double(double)>& g, double lo,
                                  double window, double tol, int max_windows) {
  ImproperResult out;
  double total = 0;
  double prev = std::numeric_limits<double>::infinity();
  int flat = 0;
  for (int w = 0; w < max_windows; ++w) {
    const double a = lo + w * window, b = a + window;
    const double piece = integrate([&](double u) { return g(u); }, a, b, tol).value;
    if (!std::isfinite(piece)) return out;  // overflowing contribution: divergent
    total += piece;
    if (std::abs(piece) <= tol * std::max(1.0, std::abs(total)) && w > 0) {
      out.finite = true;
      out.value = total;
      return out;
    }
    if (std::abs(piece) >= 0.9 * std::abs(prev)) {
      if (++flat >= 4) return out;  // not decaying: divergent
    } else {
      flat = 0;
    }
    prev = piece;
  }
  return out;
}

// Integral over the whole line via two half-line sweeps from 0.
ImproperResult integrate_line(const std::function<double(double)>& g, double tol) {
  const ImproperResult right = integrate_halfline(g, 0.0, 5.0, tol);
  if (!right.finite) return right;
  const ImproperResult left =
      integrate_halfline([&](double u) { return g(-u); }, 0.0, 5.0, tol);
  if (!left.finite) return left;
  return {true, left.value + right.value};
}


double deriv1(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double deriv2(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

double bessel_i(double q, double y) {
  if (!(q > -1.0)) throw std::invalid_argument("bessel_i: order must exceed -1");
  if (y < 0.0) throw std::invalid_argument("bessel_i: argument must be >= 0");
  if (y == 0.0) return q == 0.0 ? 1.0 : 0.0;
  const double quarter = 0.25 * y * y;
  double term = std::exp(q * std::log(0.5 * y) - std::lgamma(q + 1.0));
  double sum = term;
  for (int k = 0; k < 600; ++k) {
    term *= quarter / ((k + 1.0) * (k + 1.0 + q));
    sum += term;
    if (term <= 1e-12 * std::abs(sum)) return sum;
  }
  throw std::runtime_error("bessel_i: series budget exhausted (order " +
                           std::to_string(q) + ", argument " + std::to_string(y) + ")");
}

namespace {

// Lower regularized P(a,x) by power series, valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized Q(a,x) by Lentz continued fraction, valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_q: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488); }

}  // namespace renv::num
