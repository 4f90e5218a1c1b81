#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "renv/rng.hpp"

namespace renv::sde {

// One-dimensional domain; reflection only makes sense at finite endpoints.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool reflect_lo = false;
  bool reflect_hi = false;
};

Interval half_line(double lo = 0.0);        // [lo, inf), reflecting at lo
Interval bounded(double lo, double hi);     // [lo, hi], reflecting both ends
Interval whole_line();

// Uniform-grid path with cumulative boundary local times. value[k] is the
// state at time t0 + k*dt; ltime_* are nondecreasing and start at 0.
struct ReflectedPath {
  double dt = 0;
  std::vector<double> value;
  std::vector<double> ltime_lo;
  std::vector<double> ltime_hi;

  double t_end() const { return dt * (value.empty() ? 0 : value.size() - 1); }
};

struct StepResult {
  double value = 0;
  double dl = 0;  // local-time increment at lo
  double du = 0;  // at hi
};

// Discrete one-sided map: z[k] = z0 + w[k] + l[k] >= 0 with
// l[k] = max(0, -z0 - min(0, min_{j<=k} w[j])).
struct SkorohodResult {
  std::vector<double> z;
  std::vector<double> l;
};
SkorohodResult skorohod_map(const std::vector<double>& driving, double z0);

// Euler proposal folded back into the interval by mirror reflection;
// the fold magnitudes are the local-time increments.
StepResult euler_reflect_step(double x, double drift, double diffusion, double dt,
                              double gauss, const Interval& iv);

ReflectedPath simulate_reflected(const std::function<double(double)>& drift,
                                 const std::function<double(double)>& diffusion,
                                 const Interval& iv, double z0, double t_end, double dt,
                                 RngStream& rng);

// Exact Poisson thinning against a constant bound; intensity is evaluated
// at the path value in force at each candidate time. Throws when the
// observed intensity exceeds the bound.
std::vector<double> thinning_jumps(double intensity_bound,
                                   const std::function<double(double, double)>& intensity,
                                   const ReflectedPath& path, RngStream& rng);

}  // namespace renv::sde
