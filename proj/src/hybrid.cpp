#include "renv/hybrid.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "renv/numerics.hpp"

namespace renv::hybrid {

namespace {

// Frozen-rate queue jumps inside one Euler step.
void queue_jumps_in_step(double dt, double arrival, double service, int& n, long& jumps,
                         RngStream& rng) {
  double remaining = dt;
  while (true) {
    const double total = arrival + (n >= 1 ? service : 0.0);
    if (!(total > 0)) return;
    const double wait = rng.exponential(total);
    if (wait >= remaining) return;
    remaining -= wait;
    if (rng.uniform() * total < arrival)
      ++n;
    else
      --n;
    ++jumps;
  }
}

}  // namespace

double kappa_lambda(const LambdaDiffusionSpec& spec, double lam, int n) {
  if (!(lam > spec.eps && lam < 1.0))
    throw std::invalid_argument("kappa_lambda: lam outside (eps, 1)");
  return std::pow(lam, n) / spec.sigma(lam);
}

XiResult xi_lambda(const LambdaDiffusionSpec& spec) {
  // Sum of integral terms with an exact tail: summing the geometric
  // series under the integral gives tail_N = int lam^{N+1}/((1-lam) sigma).
  XiResult out;
  const int n_terms = 64;
  double partial = 0;
  for (int n = 0; n <= n_terms; ++n)
    partial += num::integrate(
                   [&](double lam) { return std::pow(lam, n) / spec.sigma(lam); },
                   spec.eps, 1.0, 1e-12)
                   .value;
  // substitute lam = 1 - e^{-u}: the 1/(1-lam) factor cancels the Jacobian
  const double u0 = -std::log(1.0 - spec.eps);
  auto tail = num::integrate_halfline(
      [&](double u) {
        const double lam = 1.0 - std::exp(-u);
        return std::pow(lam, n_terms + 1) / spec.sigma(lam);
      },
      u0);
  if (!tail.finite) {
    out.note = "tail of sum_n int lam^n/sigma does not converge";
    return out;
  }
  out.finite = true;
  out.value = partial + tail.value;
  return out;
}

double kappa_mu(const MuBMSpec& spec, double mu, int n) {
  if (!(mu > 1.0)) throw std::invalid_argument("kappa_mu: mu must exceed 1");
  return std::exp(2.0 * (mu - 1.0) * spec.drift) / (std::pow(mu, n) * spec.sigma(mu));
}

XiResult xi_mu(const MuBMSpec& spec) {
  // Summed form: int_1^inf e^{2(mu-1)b} mu / ((mu-1) sigma(mu)) dmu,
  // opened up at the mu = 1 end by mu = 1 + e^v.
  XiResult out;
  auto integrand = [&](double v) {
    // dmu = (mu - 1) dv cancels the 1/(mu - 1) factor
    const double mu = 1.0 + std::exp(v);
    return std::exp(2.0 * (mu - 1.0) * spec.drift) * mu / spec.sigma(mu);
  };
  auto r = num::integrate_line(integrand);
  if (!r.finite) {
    out.note = "normalizer integral diverges (needs sigma growth at 1 and infinity)";
    return out;
  }
  out.finite = true;
  out.value = r.value;
  return out;
}

std::pair<double, double> wedge_project(double lam, double mu) {
  if (!(lam > 0) || !(mu > 0)) throw std::invalid_argument("wedge_project: need positive rates");
  return {std::min(lam, mu), std::max(lam, mu)};
}

double kappa_wedge(const WedgeSpec& spec, double lam, double mu, int n) {
  if (!(lam > 0) || !(mu >= lam))
    throw std::invalid_argument("kappa_wedge: point outside the closed wedge");
  return std::pow(lam / mu, n) * std::exp(2.0 * spec.theta * (lam + mu)) /
         spec.sigma(lam, mu);
}

struct InnerDiverges {};

XiResult xi_wedge(const WedgeSpec& spec) {
  // Sum over n gives mu/(mu - lam); coordinates (lam, u = mu - lam) with
  // u = e^w opening the diagonal.
  XiResult out;
  auto outer = [&](double lam) {
    auto r = num::integrate_line([&](double w) {
      const double u = std::exp(w);
      const double mu = lam + u;
      return mu * std::exp(2.0 * spec.theta * (lam + mu)) / spec.sigma(lam, mu);
    });
    if (!r.finite) throw InnerDiverges{};
    return r.value;
  };
  try {
    auto r = num::integrate_halfline(outer, 0.0);
    if (!r.finite) throw InnerDiverges{};
    out.finite = true;
    out.value = r.value;
  } catch (const InnerDiverges&) {
    out.note = "normalizer diverges (diagonal or far-field contribution)";
  }
  return out;
}

double kappa_switch(const SwitchSpec& spec, double z, double x) {
  bool known = false;
  for (double zs : spec.z_support) known = known || zs == z;
  if (!known) throw std::invalid_argument("kappa_switch: z outside the support of v");
  return std::exp(2.0 * z * x) / spec.sigma(z);
}

XiResult xi_switch(const SwitchSpec& spec) {
  XiResult out;
  if (!spec.x_domain) {
    out.note = "int e^{2zx} dx over the whole line is infinite for every sigma(z)";
    return out;
  }
  const auto& iv = *spec.x_domain;
  double total = 0;
  for (std::size_t i = 0; i < spec.z_support.size(); ++i) {
    const double z = spec.z_support[i];
    total += spec.v_weight[i] / spec.sigma(z) *
             num::integrate([&](double x) { return std::exp(2.0 * z * x); }, iv.lo,
                            iv.hi, 1e-12)
                 .value;
  }
  out.finite = true;
  out.value = total;
  return out;
}

double kappa_twocomp(const TwoCompSpec& spec, double z) {
  if (!(z >= 0)) throw std::invalid_argument("kappa_twocomp: z lives on the half line");
  return std::exp(2.0 * spec.drift * z) / spec.sigma(z);
}

XiResult xi_twocomp(const TwoCompSpec& spec) {
  XiResult out;
  (void)spec;
  out.note = "base invariant measure is Lebesgue on R^d: infinite total mass";
  return out;  // never finite
}

WieResiduals wie_check_lambda(const LambdaDiffusionSpec& spec,
                              const std::vector<double>& grid, int n_max) {
  WieResiduals r;
  const double h = 1e-4;
  for (double lam : grid) {
    for (int n = 0; n <= n_max; ++n) {
      // kappa times the diffusion coefficient collapses to beta^2/2
      auto f = [&](double l) {
        return kappa_lambda(spec, l, n) * spec.sigma(l) * spec.beta(n) * spec.beta(n) /
               (2.0 * std::pow(l, n));
      };
      const double scale = std::abs(f(lam)) + 1.0;
      r.max_diffusion = std::max(r.max_diffusion, std::abs(num::deriv2(f, lam, h)) / scale);

      const double up = kappa_lambda(spec, lam, n + 1);
      const double here = kappa_lambda(spec, lam, n);
      const double down = n >= 1 ? kappa_lambda(spec, lam, n - 1) : 0.0;
      const double lhs = here * (lam + (n >= 1 ? 1.0 : 0.0));
      const double rhs = down * lam + up;
      r.max_recurrence =
          std::max(r.max_recurrence, std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs)));
    }
  }
  return r;
}

double ode_residual_mu(const MuBMSpec& spec, double mu, int n, double exponent_scale,
                       double h) {
  auto f = [&](double m) {
    const double eta = std::exp(2.0 * exponent_scale * (m - 1.0) * spec.drift) /
                       (std::pow(m, n) * spec.sigma(m));
    return std::pow(m, n) * spec.sigma(m) * eta;
  };
  const double scale = std::abs(f(mu)) + 1.0;
  return (0.5 * num::deriv2(f, mu, h) - spec.drift * num::deriv1(f, mu, h)) / scale;
}

WieResiduals wie_check_mu(const MuBMSpec& spec, const std::vector<double>& grid,
                          int n_max) {
  WieResiduals r;
  for (double mu : grid) {
    for (int n = 0; n <= n_max; ++n) {
      r.max_diffusion = std::max(r.max_diffusion, std::abs(ode_residual_mu(spec, mu, n)));
      const double here = kappa_mu(spec, mu, n);
      const double up = kappa_mu(spec, mu, n + 1);
      const double down = n >= 1 ? kappa_mu(spec, mu, n - 1) : 0.0;
      const double lhs = here * (1.0 + (n >= 1 ? mu : 0.0));
      const double rhs = down + mu * up;
      r.max_recurrence =
          std::max(r.max_recurrence, std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs)));
    }
  }
  return r;
}

WieResiduals wie_check_wedge(const WedgeSpec& spec,
                             const std::vector<std::pair<double, double>>& grid,
                             int n_max) {
  WieResiduals r;
  const double h = 1e-4;
  // mu^n sigma kappa (mu/lam)^n ... reduces to the environment factor alone
  auto v = [&](double lam, double mu) { return std::exp(2.0 * spec.theta * (lam + mu)); };
  for (const auto& [lam, mu] : grid) {
    const double scale = v(lam, mu) + 1.0;
    const double dxx = num::deriv2([&](double l) { return v(l, mu); }, lam, h);
    const double dyy = num::deriv2([&](double m) { return v(lam, m); }, mu, h);
    const double dx = num::deriv1([&](double l) { return v(l, mu); }, lam, h);
    const double dy = num::deriv1([&](double m) { return v(lam, m); }, mu, h);
    r.max_diffusion = std::max(
        r.max_diffusion,
        std::abs(0.5 * dxx + 0.5 * dyy - spec.theta * dx - spec.theta * dy) / scale);
    for (int n = 0; n <= n_max; ++n) {
      const double here = kappa_wedge(spec, lam, mu, n);
      const double up = kappa_wedge(spec, lam, mu, n + 1);
      const double down = n >= 1 ? kappa_wedge(spec, lam, mu, n - 1) : 0.0;
      const double lhs = here * (lam + (n >= 1 ? mu : 0.0));
      const double rhs = down * lam + mu * up;
      r.max_recurrence =
          std::max(r.max_recurrence, std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs)));
    }
  }
  return r;
}

SwitchResiduals wie_check_switch(const SwitchSpec& spec, const std::vector<double>& x_grid) {
  SwitchResiduals r;
  const double h = 1e-4;
  const int nz = static_cast<int>(spec.z_support.size());
  for (double x : x_grid) {
    for (int i = 0; i < nz; ++i) {
      const double zi = spec.z_support[i];
      double out_flow = 0, in_flow = 0;
      for (int j = 0; j < nz; ++j) {
        if (j == i) continue;
        const double zj = spec.z_support[j];
        out_flow += kappa_switch(spec, zi, x) * spec.v_weight[i] * spec.sigma(zi) *
                    std::exp(-2.0 * zi * x) * spec.jump(x, i, j) * spec.v_weight[j];
        in_flow += kappa_switch(spec, zj, x) * spec.v_weight[j] * spec.sigma(zj) *
                   std::exp(-2.0 * zj * x) * spec.jump(x, j, i) * spec.v_weight[i];
      }
      r.max_env_balance = std::max(
          r.max_env_balance, std::abs(out_flow - in_flow) / (out_flow + in_flow + 1.0));

      // -d/dx(z m) + (1/2) d^2/dx^2 m on the density m = e^{2zx}
      auto m = [&](double y) { return std::exp(2.0 * zi * y); };
      const double res = -zi * num::deriv1(m, x, h) + 0.5 * num::deriv2(m, x, h);
      r.max_base_adjoint = std::max(r.max_base_adjoint, std::abs(res) / (m(x) + 1.0));
    }
  }
  return r;
}

std::vector<std::string> check_switch_invariance(const SwitchSpec& spec,
                                                 const std::vector<double>& x_samples) {
  std::vector<std::string> warnings;
  const int nz = static_cast<int>(spec.z_support.size());
  for (double x : x_samples) {
    for (int i = 0; i < nz; ++i) {
      double row = 0, col = 0;
      for (int j = 0; j < nz; ++j) {
        if (j == i) continue;
        row += spec.jump(x, i, j) * spec.v_weight[j];
        col += spec.jump(x, j, i) * spec.v_weight[j];
      }
      if (std::abs(row - col) > 1e-10 * (1.0 + row + col))
        warnings.push_back("jump kernel breaks v-weighted symmetry at x=" +
                           std::to_string(x));
    }
  }
  return warnings;
}

std::vector<std::string> validate_twocomp(const TwoCompSpec& spec,
                                          const std::vector<double>& z_grid) {
  std::vector<std::string> warnings;
  for (double z : z_grid) {
    if (!(spec.c_lower < z * z * spec.alpha(z)))
      warnings.push_back("z^2 alpha(z) falls below the lower bound at z=" +
                         std::to_string(z));
    if (!(spec.sigma(z) < spec.c_upper * (1.0 + z * z)))
      warnings.push_back("sigma(z) exceeds the quadratic growth bound at z=" +
                         std::to_string(z));
  }
  return warnings;
}

std::vector<std::string> check_beta_condition(const LambdaDiffusionSpec& spec,
                                              int n_terms) {
  std::vector<std::string> warnings;
  double sum = 0, prev = std::numeric_limits<double>::infinity();
  int growing = 0;
  for (int n = 0; n < n_terms; ++n) {
    const double term = spec.beta(n) * spec.beta(n) / std::pow(spec.eps, n);
    sum += term;
    if (term >= prev) ++growing;
    prev = term;
  }
  if (growing > n_terms / 2)
    warnings.push_back("sum beta(n)^2 / eps^n shows no decay over " +
                       std::to_string(n_terms) + " terms");
  return warnings;
}

QueueDiffusionSim simulate_lambda(const LambdaDiffusionSpec& spec, double t_end, double dt,
                                  RngStream& rng) {
  const sde::Interval iv = sde::bounded(spec.eps, 1.0);
  const long steps = static_cast<long>(std::llround(t_end / dt));
  QueueDiffusionSim sim;
  sim.env.dt = dt;
  double lam = 0.5 * (spec.eps + 1.0);
  int n = 0;
  double llo = 0, lhi = 0;
  sim.env.value.push_back(lam);
  sim.env.ltime_lo.push_back(0);
  sim.env.ltime_hi.push_back(0);
  sim.queue.push_back(n);
  for (long k = 0; k < steps; ++k) {
    const double diff =
        std::sqrt(spec.sigma(lam) * spec.beta(n) * spec.beta(n) / std::pow(lam, n));
    const auto s = sde::euler_reflect_step(lam, 0.0, diff, dt, rng.normal(), iv);
    lam = s.value;
    llo += s.dl;
    lhi += s.du;
    queue_jumps_in_step(dt, spec.alpha(lam) * lam, spec.alpha(lam) * 1.0, n, sim.jumps, rng);
    sim.env.value.push_back(lam);
    sim.env.ltime_lo.push_back(llo);
    sim.env.ltime_hi.push_back(lhi);
    sim.queue.push_back(n);
  }
  return sim;
}

QueueDiffusionSim simulate_mu(const MuBMSpec& spec, double t_end, double dt,
                              RngStream& rng) {
  const sde::Interval iv = sde::half_line(1.0);
  const long steps = static_cast<long>(std::llround(t_end / dt));
  QueueDiffusionSim sim;
  sim.env.dt = dt;
  double mu = 2.0;
  int n = 0;
  double llo = 0;
  sim.env.value.push_back(mu);
  sim.env.ltime_lo.push_back(0);
  sim.env.ltime_hi.push_back(0);
  sim.queue.push_back(n);
  const double scale_cap = 0.1 / dt;  // mu^n sigma is unbounded in n
  for (long k = 0; k < steps; ++k) {
    const double scale = std::min(std::pow(mu, n) * spec.sigma(mu), scale_cap);
    const auto s = sde::euler_reflect_step(mu, spec.drift * scale, std::sqrt(scale), dt,
                                           rng.normal(), iv);
    mu = s.value;
    llo += s.dl;
    queue_jumps_in_step(dt, spec.alpha(mu) * 1.0, spec.alpha(mu) * mu, n, sim.jumps, rng);
    sim.env.value.push_back(mu);
    sim.env.ltime_lo.push_back(llo);
    sim.env.ltime_hi.push_back(0);
    sim.queue.push_back(n);
  }
  return sim;
}

namespace {

WedgeSim wedge_engine(const WedgeSpec& spec, double t_end, double dt, RngStream& rng,
                      bool covering) {
  const long steps = static_cast<long>(std::llround(t_end / dt));
  WedgeSim sim;
  sim.lam.dt = sim.mu.dt = dt;
  double u = 0.5, v = 1.5;  // covering coordinates (quadrant)
  int n = 0;
  const sde::Interval quad = sde::half_line(0.0);
  auto record = [&](double a, double b) {
    const auto [lo, hi] = wedge_project(std::max(a, 1e-300), std::max(b, 1e-300));
    sim.lam.value.push_back(lo);
    sim.mu.value.push_back(hi);
    sim.lam.ltime_lo.push_back(0);
    sim.lam.ltime_hi.push_back(0);
    sim.mu.ltime_lo.push_back(0);
    sim.mu.ltime_hi.push_back(0);
    sim.queue.push_back(n);
  };
  record(u, v);
  // The time change (mu/lam)^n sigma is unbounded near lam = 0 with a
  // nonempty queue; cap it so one Euler step cannot outrun the grid.
  const double factor_cap = 0.1 / dt;
  for (long k = 0; k < steps; ++k) {
    const auto [lam, mu] = wedge_project(std::max(u, 1e-12), std::max(v, 1e-12));
    const double factor =
        std::min(std::pow(mu / lam, n) * spec.sigma(lam, mu), factor_cap);
    const double drift = spec.theta * factor;
    const double diff = std::sqrt(factor);
    const auto su = sde::euler_reflect_step(u, drift, diff, dt, rng.normal(), quad);
    const auto sv = sde::euler_reflect_step(v, drift, diff, dt, rng.normal(), quad);
    u = su.value;
    v = sv.value;
    if (!covering && u > v) std::swap(u, v);  // fold across the diagonal
    const auto [plam, pmu] = wedge_project(std::max(u, 1e-12), std::max(v, 1e-12));
    queue_jumps_in_step(dt, spec.alpha(plam, pmu) * plam, spec.alpha(plam, pmu) * pmu, n,
                        sim.jumps, rng);
    record(u, v);
  }
  return sim;
}

}  // namespace

WedgeSim simulate_wedge(const WedgeSpec& spec, double t_end, double dt, RngStream& rng) {
  return wedge_engine(spec, t_end, dt, rng, false);
}

WedgeSim simulate_wedge_covering(const WedgeSpec& spec, double t_end, double dt,
                                 RngStream& rng) {
  return wedge_engine(spec, t_end, dt, rng, true);
}

SwitchSim simulate_switch(const SwitchSpec& spec, double t_end, double dt,
                          RngStream& rng) {
  const long steps = static_cast<long>(std::llround(t_end / dt));
  const sde::Interval iv = spec.x_domain ? *spec.x_domain : sde::whole_line();
  const int nz = static_cast<int>(spec.z_support.size());
  SwitchSim sim;
  sim.x.dt = dt;
  int zi = 0;
  double x = 0;
  double llo = 0, lhi = 0;
  sim.z.push_back(spec.z_support[zi]);
  sim.x.value.push_back(x);
  sim.x.ltime_lo.push_back(0);
  sim.x.ltime_hi.push_back(0);
  std::vector<double> rates(nz);
  for (long k = 0; k < steps; ++k) {
    const double z = spec.z_support[zi];
    const auto s = sde::euler_reflect_step(x, spec.alpha(z) * z, std::sqrt(spec.alpha(z)),
                                           dt, rng.normal(), iv);
    x = s.value;
    llo += s.dl;
    lhi += s.du;
    // frozen-rate switching within the step
    double remaining = dt;
    while (true) {
      double total = 0;
      for (int j = 0; j < nz; ++j) {
        rates[j] = j == zi ? 0.0
                           : spec.sigma(spec.z_support[zi]) *
                                 std::exp(-2.0 * spec.z_support[zi] * x) *
                                 spec.jump(x, zi, j) * spec.v_weight[j];
        total += rates[j];
      }
      if (!(total > 0)) break;
      const double wait = rng.exponential(total);
      if (wait >= remaining) break;
      remaining -= wait;
      double pick = rng.uniform() * total;
      int j = -1;
      for (int c = 0; c < nz; ++c) {
        if (rates[c] <= 0) continue;
        j = c;
        if (pick <= rates[c]) break;
        pick -= rates[c];
      }
      if (j < 0) break;
      zi = j;
      ++sim.switches;
    }
    sim.z.push_back(spec.z_support[zi]);
    sim.x.value.push_back(x);
    sim.x.ltime_lo.push_back(llo);
    sim.x.ltime_hi.push_back(lhi);
  }
  return sim;
}

TwoCompSim simulate_twocomp(const TwoCompSpec& spec, double t_end, double dt,
                            RngStream& rng) {
  const long steps = static_cast<long>(std::llround(t_end / dt));
  TwoCompSim sim;
  sim.z.dt = dt;
  sim.base.resize(steps + 1, spec.dim);
  sim.base.row(0).setZero();
  double z = 1.0, llo = 0;
  sim.z.value.push_back(z);
  sim.z.ltime_lo.push_back(0);
  sim.z.ltime_hi.push_back(0);
  const sde::Interval iv = sde::half_line(0.0);
  for (long k = 0; k < steps; ++k) {
    const double sd = std::sqrt(spec.alpha(z)) * z * std::sqrt(dt);
    for (int d = 0; d < spec.dim; ++d)
      sim.base(k + 1, d) = sim.base(k, d) + sd * rng.normal();
    const auto s = sde::euler_reflect_step(z, spec.drift * spec.sigma(z),
                                           std::sqrt(spec.sigma(z)), dt, rng.normal(), iv);
    z = s.value;
    llo += s.dl;
    sim.z.value.push_back(z);
    sim.z.ltime_lo.push_back(llo);
    sim.z.ltime_hi.push_back(0);
  }
  return sim;
}

SimResult simulate_model(const ModelSpec& spec, double t_end, double dt, RngStream& rng) {
  return std::visit(
      [&](const auto& s) -> SimResult {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LambdaDiffusionSpec>)
          return simulate_lambda(s, t_end, dt, rng);
        else if constexpr (std::is_same_v<T, MuBMSpec>)
          return simulate_mu(s, t_end, dt, rng);
        else if constexpr (std::is_same_v<T, WedgeSpec>)
          return simulate_wedge(s, t_end, dt, rng);
        else if constexpr (std::is_same_v<T, SwitchSpec>)
          return simulate_switch(s, t_end, dt, rng);
        else
          return simulate_twocomp(s, t_end, dt, rng);
      },
      spec);
}

}  // namespace renv::hybrid
