#include "renv/sde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace renv::sde {

Interval half_line(double lo) {
  Interval iv;
  iv.lo = lo;
  iv.reflect_lo = true;
  return iv;
}

Interval bounded(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("interval: need lo < hi");
  Interval iv;
  iv.lo = lo;
  iv.hi = hi;
  iv.reflect_lo = true;
  iv.reflect_hi = true;
  return iv;
}

Interval whole_line() { return Interval{}; }

SkorohodResult skorohod_map(const std::vector<double>& driving, double z0) {
  if (z0 < 0) throw std::invalid_argument("skorohod_map: need z0 >= 0");
  SkorohodResult out;
  out.z.reserve(driving.size());
  out.l.reserve(driving.size());
  double running_inf = 0.0;  // the driving path starts at 0
  for (const double w : driving) {
    running_inf = std::min(running_inf, w);
    const double l = std::max(0.0, -z0 - running_inf);
    out.l.push_back(l);
    out.z.push_back(z0 + w + l);
  }
  return out;
}

StepResult euler_reflect_step(double x, double drift, double diffusion, double dt,
                              double gauss, const Interval& iv) {
  if (!(dt > 0)) throw std::invalid_argument("euler_reflect_step: need dt > 0");
  double p = x + drift * dt + diffusion * std::sqrt(dt) * gauss;
  if (!std::isfinite(p))
    throw std::runtime_error("euler_reflect_step: non-finite proposal from x=" +
                             std::to_string(x) + " drift=" + std::to_string(drift) +
                             " diffusion=" + std::to_string(diffusion));
  StepResult out;
  for (int folds = 0; folds < 1000; ++folds) {
    if (iv.reflect_lo && p < iv.lo) {
      out.dl += iv.lo - p;
      p = 2.0 * iv.lo - p;
      continue;
    }
    if (iv.reflect_hi && p > iv.hi) {
      out.du += p - iv.hi;
      p = 2.0 * iv.hi - p;
      continue;
    }
    out.value = p;
    return out;
  }
  throw std::runtime_error("euler_reflect_step: fold budget exhausted (step too large)");
}

ReflectedPath simulate_reflected(const std::function<double(double)>& drift,
                                 const std::function<double(double)>& diffusion,
                                 const Interval& iv, double z0, double t_end, double dt,
                                 RngStream& rng) {
  if (!(dt > 0) || !(t_end >= 0)) throw std::invalid_argument("simulate_reflected: bad grid");
  const long steps = static_cast<long>(std::llround(t_end / dt));
  ReflectedPath path;
  path.dt = dt;
  path.value.reserve(steps + 1);
  path.ltime_lo.reserve(steps + 1);
  path.ltime_hi.reserve(steps + 1);
  path.value.push_back(z0);
  path.ltime_lo.push_back(0);
  path.ltime_hi.push_back(0);
  double x = z0, llo = 0, lhi = 0;
  for (long k = 0; k < steps; ++k) {
    const StepResult s =
        euler_reflect_step(x, drift(x), diffusion(x), dt, rng.normal(), iv);
    x = s.value;
    llo += s.dl;
    lhi += s.du;
    path.value.push_back(x);
    path.ltime_lo.push_back(llo);
    path.ltime_hi.push_back(lhi);
  }
  return path;
}

std::vector<double> thinning_jumps(double intensity_bound,
                                   const std::function<double(double, double)>& intensity,
                                   const ReflectedPath& path, RngStream& rng) {
  if (!(intensity_bound >= 0)) throw std::invalid_argument("thinning_jumps: bad bound");
  std::vector<double> jumps;
  if (intensity_bound == 0) return jumps;
  const double t_end = path.t_end();
  double t = 0;
  while (true) {
    t += rng.exponential(intensity_bound);
    if (t >= t_end) return jumps;
    const std::size_t k =
        std::min(path.value.size() - 1, static_cast<std::size_t>(t / path.dt));
    const double lam = intensity(t, path.value[k]);
    if (lam > intensity_bound * (1.0 + 1e-12))
      throw std::runtime_error("thinning_jumps: intensity " + std::to_string(lam) +
                               " exceeds the bound " + std::to_string(intensity_bound) +
                               "; raise the bound");
    if (rng.uniform() * intensity_bound <= lam) jumps.push_back(t);
  }
}

}  // namespace renv::sde
