#include "renv/ouenv.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "renv/numerics.hpp"

namespace renv::ouenv {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::function<double(double)> one() {
  return [](double) { return 1.0; };
}

void require_rect(const CombinedDiffusionSpec& spec, const char* who) {
  if (!std::isfinite(spec.z_domain.lo) || !std::isfinite(spec.z_domain.hi) ||
      !std::isfinite(spec.x_domain.lo) || !std::isfinite(spec.x_domain.hi))
    throw std::invalid_argument(std::string(who) + ": needs a bounded rectangle");
}

}  // namespace

CombinedDiffusionSpec make_model_b(double drift, const sde::Interval& z_domain,
                                   const sde::Interval& x_domain) {
  CombinedDiffusionSpec s;
  s.base_drift = [](double x) { return -x; };
  s.env_drift = [drift](double) { return drift; };
  s.env_diffusion = one();
  s.density = [](double z, double x) { return std::exp(-x * x / (z * z)); };
  s.env_density = [drift](double z) { return std::exp(2.0 * drift * z); };
  s.alpha = one();
  s.sigma = one();
  s.z_domain = z_domain;
  s.x_domain = x_domain;
  return s;
}

CombinedDiffusionSpec make_model_c(const sde::Interval& z_domain,
                                   const sde::Interval& x_domain) {
  CombinedDiffusionSpec s = make_model_b(0.0, z_domain, x_domain);
  s.env_drift = [](double z) { return -z; };
  s.env_density = [](double z) { return std::exp(-z * z); };
  return s;
}

CombinedDiffusionSpec make_model_d(const ModelDParams& params,
                                   const sde::Interval& z_domain,
                                   const sde::Interval& x_domain) {
  if (!(params.b > 0) || params.a < 0)
    throw std::invalid_argument("model D: need a >= 0 and b > 0");
  CombinedDiffusionSpec s = make_model_b(0.0, z_domain, x_domain);
  const double a = params.a, b = params.b;
  s.env_drift = [a, b](double z) { return a * (b - z); };
  s.env_diffusion = [](double z) { return z; };
  s.env_density = [a, b](double z) {
    return std::pow(z, 2.0 * a * b - 1.0) * std::exp(-2.0 * a * z);
  };
  return s;
}

namespace {

double partial(const std::function<double(double, double)>& f,
               const std::function<double(double, double)>& analytic, double z, double x,
               bool in_x, int order) {
  if (analytic) return analytic(z, x);
  const double h = 1e-5 * std::max(1.0, std::abs(in_x ? x : z));
  auto slice = in_x ? std::function<double(double)>([&](double u) { return f(z, u); })
                    : std::function<double(double)>([&](double u) { return f(u, x); });
  const double at = in_x ? x : z;
  return order == 1 ? num::deriv1(slice, at, h) : num::deriv2(slice, at, h);
}

}  // namespace

double apply_r(const CombinedDiffusionSpec& spec, const TestFunction& phi, double z,
               double x) {
  const double m = spec.density(z, x);
  if (m < 1e-300)
    throw std::runtime_error("apply_r: density underflow at z=" + std::to_string(z) +
                             ", x=" + std::to_string(x) + "; 1/m overflows");
  const double fx = partial(phi.f, phi.fx, z, x, true, 1);
  const double fxx = partial(phi.f, phi.fxx, z, x, true, 2);
  const double fz = partial(phi.f, phi.fz, z, x, false, 1);
  const double fzz = partial(phi.f, phi.fzz, z, x, false, 2);
  const double alpha = spec.alpha ? spec.alpha(z) : 1.0;
  const double sigma = spec.sigma ? spec.sigma(z) : 1.0;
  const double base = spec.base_drift(x) * fx + 0.5 * z * z * fxx;
  const double env = spec.env_drift(z) * fz + 0.5 * spec.env_diffusion(z) * fzz;
  return alpha * base + sigma * env / m;
}

double adjoint_residual_base(const CombinedDiffusionSpec& spec, double z, double x,
                             double h) {
  auto am = [&](double u) { return spec.base_drift(u) * spec.density(z, u); };
  auto m = [&](double u) { return spec.density(z, u); };
  return -num::deriv1(am, x, h) + 0.5 * z * z * num::deriv2(m, x, h);
}

double adjoint_residual_env(const CombinedDiffusionSpec& spec, double z, double h) {
  auto cw = [&](double u) { return spec.env_drift(u) * spec.env_density(u); };
  auto dw = [&](double u) { return spec.env_diffusion(u) * spec.env_density(u); };
  return -num::deriv1(cw, z, h) + 0.5 * num::deriv2(dw, z, h);
}

double kappa_density(const CombinedDiffusionSpec& spec, double z, double x) {
  const double sigma = spec.sigma ? spec.sigma(z) : 1.0;
  return spec.density(z, x) * spec.env_density(z) / sigma;
}

QuadratureReport wie_quadrature(const CombinedDiffusionSpec& spec,
                                const std::vector<TestFunction>& family, double abs_tol) {
  require_rect(spec, "wie_quadrature");
  QuadratureReport rep;
  for (const auto& phi : family) {
    const double v = num::integrate2d_or_throw(
        [&](double z, double x) { return apply_r(spec, phi, z, x) * kappa_density(spec, z, x); },
        spec.z_domain.lo, spec.z_domain.hi, spec.x_domain.lo, spec.x_domain.hi, abs_tol);
    rep.per_function.emplace_back(phi.name, v);
    rep.max_abs = std::max(rep.max_abs, std::abs(v));
  }
  return rep;
}

std::vector<TestFunction> neumann_test_family(const sde::Interval& z_domain,
                                              const sde::Interval& x_domain) {
  const double z1 = z_domain.lo, lz = z_domain.hi - z_domain.lo;
  const double x1 = x_domain.lo, lx = x_domain.hi - x_domain.lo;
  std::vector<TestFunction> fam;
  const int modes[6][2] = {{1, 0}, {0, 1}, {1, 1}, {2, 1}, {1, 2}, {2, 2}};
  for (const auto& m : modes) {
    const double kz = m[0] * kPi / lz, kx = m[1] * kPi / lx;
    TestFunction t;
    t.name = "cos" + std::to_string(m[0]) + std::to_string(m[1]);
    t.f = [=](double z, double x) {
      return std::cos(kz * (z - z1)) * std::cos(kx * (x - x1));
    };
    t.fx = [=](double z, double x) {
      return -kx * std::cos(kz * (z - z1)) * std::sin(kx * (x - x1));
    };
    t.fxx = [=](double z, double x) {
      return -kx * kx * std::cos(kz * (z - z1)) * std::cos(kx * (x - x1));
    };
    t.fz = [=](double z, double x) {
      return -kz * std::sin(kz * (z - z1)) * std::cos(kx * (x - x1));
    };
    t.fzz = [=](double z, double x) {
      return -kz * kz * std::cos(kz * (z - z1)) * std::cos(kx * (x - x1));
    };
    fam.push_back(std::move(t));
  }
  return fam;
}

TestFunction exp_x_function() {
  TestFunction t;
  t.name = "exp_x";
  t.f = [](double, double x) { return std::exp(x); };
  t.fx = [](double, double x) { return std::exp(x); };
  t.fxx = [](double, double x) { return std::exp(x); };
  t.fz = [](double, double) { return 0.0; };
  t.fzz = [](double, double) { return 0.0; };
  return t;
}

double density_ou(double t, double x, double x1, double z) {
  if (!(t > 0) || z == 0) throw std::invalid_argument("density_ou: need t > 0, z != 0");
  const double decay = std::exp(-t);
  const double spread = 1.0 - std::exp(-2.0 * t);
  const double dev = x1 - x * decay;
  return std::exp(-dev * dev / (z * z * spread)) /
         (std::sqrt(kPi) * std::abs(z) * std::sqrt(spread));
}

double density_cir(double t, double z, double z1, double a, double b) {
  if (!(t > 0) || !(z > 0) || !(z1 > 0) || !(a > 0) || !(b > 0))
    throw std::invalid_argument("density_cir: all arguments must be positive");
  const double c = 2.0 * a / (1.0 - std::exp(-a * t));
  const double q = 2.0 * a * b - 1.0;
  const double decay = std::exp(-a * t);
  const double y = 2.0 * c * std::sqrt(z * z1 * decay);
  return c * std::exp(-c * z * decay - c * z1) *
         std::pow(z1 * std::exp(a * t) / z, 0.5 * q) * num::bessel_i(q, y);
}

double density_rbm(double t, double z, double z1, double drift) {
  if (!(t > 0) || !(z > 0) || !(z1 > 0))
    throw std::invalid_argument("density_rbm: need t, z, z' > 0");
  const double b = drift;
  // spectral form: a stationary-like term plus a continuous-spectrum
  // integral, implemented as printed in its source
  const double head = 2.0 * b * std::exp(2.0 * b * z) / (std::exp(2.0 * b * z) - 1.0);
  auto spectral = [&](double s) {
    return std::exp(-s * s * t / 2.0) / (s * s + b * b) *
           (s * std::cos(s * z) + b * std::sin(s * z)) *
           (s * std::cos(s * z1) + b * std::sin(s * z1));
  };
  const double s_max = std::sqrt(2.0 * 40.0 / t);
  const double tail = num::integrate(spectral, 0.0, s_max, 1e-9, 24).value;
  return head + 2.0 / kPi * std::exp(b * (z1 - z) - b * b * t / 2.0) * tail;
}

GateReport validate_density_rbm(double drift, double t, double z) {
  GateReport rep;
  // the gate decides at the 1e-3 level; a coarse mass integral suffices
  const double mass =
      num::integrate([&](double z1) { return density_rbm(t, z, z1, drift); }, 1e-6, 30.0,
                     1e-5, 16)
          .value;
  rep.integral = mass;
  rep.enabled = std::abs(mass - 1.0) < 1e-3;
  rep.note = rep.enabled ? "density oracle enabled"
                         : "density oracle disabled: probe mass deviates from 1";
  return rep;
}

RectSim simulate_rect_system(const CombinedDiffusionSpec& spec, double z0, double x0,
                             double t_end, double dt, RngStream& rng) {
  require_rect(spec, "simulate_rect_system");
  const double zw = spec.z_domain.hi - spec.z_domain.lo;
  const double xw = spec.x_domain.hi - spec.x_domain.lo;
  // step-size guard over the corners and mid-edges of the rectangle
  double worst_z = 0, worst_x = 0;
  for (double fz : {0.0, 0.5, 1.0})
    for (double fx : {0.0, 0.5, 1.0}) {
      const double z = spec.z_domain.lo + fz * zw;
      const double x = spec.x_domain.lo + fx * xw;
      const double m = spec.density(z, x);
      const double zmove = std::abs(spec.env_drift(z)) / m * dt +
                           std::sqrt(spec.env_diffusion(z) / m * dt);
      const double xmove = std::abs(spec.base_drift(x)) * dt + std::abs(z) * std::sqrt(dt);
      worst_z = std::max(worst_z, zmove);
      worst_x = std::max(worst_x, xmove);
    }
  if (worst_z > 0.1 * zw || worst_x > 0.1 * xw)
    throw std::invalid_argument(
        "simulate_rect_system: dt too coarse; per-step moves reach " +
        std::to_string(worst_z) + " (z) / " + std::to_string(worst_x) +
        " (x); reduce dt");

  const long steps = static_cast<long>(std::llround(t_end / dt));
  RectSim sim;
  sim.z.dt = sim.x.dt = dt;
  double z = z0, x = x0, zlo = 0, zhi = 0, xlo = 0, xhi = 0;
  auto push = [&]() {
    sim.z.value.push_back(z);
    sim.z.ltime_lo.push_back(zlo);
    sim.z.ltime_hi.push_back(zhi);
    sim.x.value.push_back(x);
    sim.x.ltime_lo.push_back(xlo);
    sim.x.ltime_hi.push_back(xhi);
  };
  push();
  for (long k = 0; k < steps; ++k) {
    const double m = spec.density(z, x);
    const double alpha = spec.alpha ? spec.alpha(z) : 1.0;
    const double sigma = spec.sigma ? spec.sigma(z) : 1.0;
    const auto sx = sde::euler_reflect_step(x, alpha * spec.base_drift(x),
                                            std::sqrt(alpha) * std::abs(z), dt,
                                            rng.normal(), spec.x_domain);
    const double cir_arg = std::max(spec.env_diffusion(z), 0.0);  // full truncation
    const auto sz = sde::euler_reflect_step(z, sigma * spec.env_drift(z) / m,
                                            std::sqrt(sigma * cir_arg / m), dt,
                                            rng.normal(), spec.z_domain);
    x = sx.value;
    z = sz.value;
    xlo += sx.dl;
    xhi += sx.du;
    zlo += sz.dl;
    zhi += sz.du;
    push();
  }
  return sim;
}

sde::ReflectedPath simulate_cir(double a, double b, double z0, double t_end, double dt,
                                RngStream& rng) {
  return sde::simulate_reflected([a, b](double z) { return a * (b - z); },
                                 [](double z) { return std::sqrt(std::max(z, 0.0)); },
                                 sde::half_line(0.0), z0, t_end, dt, rng);
}

std::string grid_label(int iz, int ix) {
  return std::to_string(iz) + "," + std::to_string(ix);
}

std::pair<double, double> grid_center(const CombinedDiffusionSpec& spec, int nz, int nx,
                                      int iz, int ix) {
  const double hz = (spec.z_domain.hi - spec.z_domain.lo) / nz;
  const double hx = (spec.x_domain.hi - spec.x_domain.lo) / nx;
  return {spec.z_domain.lo + (iz + 0.5) * hz, spec.x_domain.lo + (ix + 0.5) * hx};
}

std::pair<ctmc::StateSpace, ctmc::RateKernel> grid_generator(
    const CombinedDiffusionSpec& spec, int nz, int nx) {
  require_rect(spec, "grid_generator");
  const double hz = (spec.z_domain.hi - spec.z_domain.lo) / nz;
  const double hx = (spec.x_domain.hi - spec.x_domain.lo) / nx;

  std::vector<ctmc::Label> labels;
  labels.reserve(static_cast<std::size_t>(nz) * nx);
  for (int iz = 0; iz < nz; ++iz)
    for (int ix = 0; ix < nx; ++ix) labels.push_back(grid_label(iz, ix));
  ctmc::StateSpace space(std::move(labels));

  auto shared = std::make_shared<const CombinedDiffusionSpec>(spec);
  auto parse = [](const ctmc::Label& s) {
    const auto pos = s.find(',');
    return std::pair<int, int>{std::stoi(s.substr(0, pos)), std::stoi(s.substr(pos + 1))};
  };
  // Upwinded finite-volume rates: diffusion D/(2h^2) both ways plus the
  // drift pushed to its downstream neighbor.
  auto rates_at = [shared, nz, nx, hz, hx, parse](const ctmc::Label& s) {
    const auto [iz, ix] = parse(s);
    const auto [z, x] = grid_center(*shared, nz, nx, iz, ix);
    const double m = shared->density(z, x);
    const double alpha = shared->alpha ? shared->alpha(z) : 1.0;
    const double sigma = shared->sigma ? shared->sigma(z) : 1.0;
    const double a = alpha * shared->base_drift(x);
    const double cz = sigma * shared->env_drift(z) / m;
    const double dz = sigma * shared->env_diffusion(z) / m;
    const double dxx = alpha * z * z;
    struct Move {
      int iz, ix;
      double rate;
    };
    std::vector<Move> moves;
    moves.push_back({iz, ix + 1, dxx / (2 * hx * hx) + std::max(a, 0.0) / hx});
    moves.push_back({iz, ix - 1, dxx / (2 * hx * hx) + std::max(-a, 0.0) / hx});
    moves.push_back({iz + 1, ix, dz / (2 * hz * hz) + std::max(cz, 0.0) / hz});
    moves.push_back({iz - 1, ix, dz / (2 * hz * hz) + std::max(-cz, 0.0) / hz});
    return moves;
  };

  ctmc::RateKernel kernel;
  kernel.rate = [rates_at, parse](const ctmc::Label& from, const ctmc::Label& to) {
    const auto [tz, tx] = parse(to);
    for (const auto& mv : rates_at(from))
      if (mv.iz == tz && mv.ix == tx) return mv.rate;
    return 0.0;
  };
  kernel.neighbors = [rates_at, nz, nx](const ctmc::Label& s) {
    std::vector<ctmc::Label> out;
    for (const auto& mv : rates_at(s))
      if (mv.iz >= 0 && mv.iz < nz && mv.ix >= 0 && mv.ix < nx)
        out.push_back(grid_label(mv.iz, mv.ix));
    return out;
  };
  return {std::move(space), std::move(kernel)};
}

}  // namespace renv::ouenv
