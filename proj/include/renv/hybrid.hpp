#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "renv/rng.hpp"
#include "renv/sde.hpp"

namespace renv::hybrid {

struct XiResult {
  bool finite = false;
  double value = 0;
  std::string note;
};

// Single queue (unit service rate) whose arrival rate diffuses on
// (eps, 1) with reflecting ends; the diffusion scale depends on the
// queue length through beta(n).
struct LambdaDiffusionSpec {
  double eps = 0.5;
  std::function<double(int)> beta;
  std::function<double(double)> sigma;  // > 0 on [eps, 1]
  std::function<double(double)> alpha;  // > 0
};

// Single queue (unit arrival rate) whose service rate is a drifting
// Brownian motion on (1, inf), reflected at 1.
struct MuBMSpec {
  double drift = 0;
  std::function<double(double)> sigma;
  std::function<double(double)> alpha;
};

// Arrival/service pair diffusing in the ordered wedge {mu > lam > 0}
// with common drift theta and normal reflection at both sides.
struct WedgeSpec {
  double theta = -1;
  std::function<double(double, double)> sigma;
  std::function<double(double, double)> alpha;
};

// Unit-diffusion base line process whose drift z switches by a jump
// kernel; jump(x, i, j) is a density against the invariant weights
// v_weight, so the physical switch intensity i -> j is
// sigma(z_i) e^{-2 z_i x} jump(x,i,j) v_j.
struct SwitchSpec {
  std::vector<double> z_support = {1.0, -1.0};
  std::vector<double> v_weight = {1.0, 1.0};
  std::function<double(double, int, int)> jump;
  std::function<double(double)> alpha;
  std::function<double(double)> sigma;
  std::optional<sde::Interval> x_domain;  // bounded variant when set
};

// Time-scaled Wiener base in d dimensions driven by a reflected
// environment on the half line.
struct TwoCompSpec {
  std::function<double(double)> alpha;
  std::function<double(double)> sigma;
  double drift = 0;
  int dim = 1;
  double c_lower = 0.1;  // growth-bound constants for validation
  double c_upper = 10.0;
};

// --- invariant densities and normalizers ---

double kappa_lambda(const LambdaDiffusionSpec&, double lam, int n);
XiResult xi_lambda(const LambdaDiffusionSpec&);

double kappa_mu(const MuBMSpec&, double mu, int n);
XiResult xi_mu(const MuBMSpec&);

double kappa_wedge(const WedgeSpec&, double lam, double mu, int n);
XiResult xi_wedge(const WedgeSpec&);
std::pair<double, double> wedge_project(double lam, double mu);

double kappa_switch(const SwitchSpec&, double z, double x);
XiResult xi_switch(const SwitchSpec&);

// Environment factor of the invariant density against dz dx^d.
double kappa_twocomp(const TwoCompSpec&, double z);
XiResult xi_twocomp(const TwoCompSpec&);

// --- residual checks ---

struct WieResiduals {
  double max_diffusion = 0;   // adjoint residual of the continuous part
  double max_recurrence = 0;  // jump-part balance, relative
};

WieResiduals wie_check_lambda(const LambdaDiffusionSpec&, const std::vector<double>& grid,
                              int n_max);
WieResiduals wie_check_mu(const MuBMSpec&, const std::vector<double>& grid, int n_max);
// Pointwise ODE residual; exponent_scale != 1 perturbs the density for
// negative controls.
double ode_residual_mu(const MuBMSpec&, double mu, int n, double exponent_scale = 1.0,
                       double h = 1e-4);
WieResiduals wie_check_wedge(const WedgeSpec&,
                             const std::vector<std::pair<double, double>>& grid, int n_max);

struct SwitchResiduals {
  double max_env_balance = 0;   // flow balance across the support points
  double max_base_adjoint = 0;  // drift-line adjoint residual on the density
};
SwitchResiduals wie_check_switch(const SwitchSpec&, const std::vector<double>& x_grid);

std::vector<std::string> check_switch_invariance(const SwitchSpec&,
                                                 const std::vector<double>& x_samples);
std::vector<std::string> validate_twocomp(const TwoCompSpec&,
                                          const std::vector<double>& z_grid);
std::vector<std::string> check_beta_condition(const LambdaDiffusionSpec&, int n_terms);

// --- simulation ---

struct QueueDiffusionSim {
  sde::ReflectedPath env;
  std::vector<int> queue;  // aligned with env grid points
  long jumps = 0;
};

struct WedgeSim {
  sde::ReflectedPath lam, mu;
  std::vector<int> queue;
  long jumps = 0;
};

struct SwitchSim {
  std::vector<double> z;  // piecewise-constant drift per grid point
  sde::ReflectedPath x;
  long switches = 0;
};

struct TwoCompSim {
  sde::ReflectedPath z;
  Eigen::MatrixXd base;  // (steps + 1) x dim
};

QueueDiffusionSim simulate_lambda(const LambdaDiffusionSpec&, double t_end, double dt,
                                  RngStream& rng);
QueueDiffusionSim simulate_mu(const MuBMSpec&, double t_end, double dt, RngStream& rng);
WedgeSim simulate_wedge(const WedgeSpec&, double t_end, double dt, RngStream& rng);
// Covering pair on the quadrant, projected to the wedge at readout.
WedgeSim simulate_wedge_covering(const WedgeSpec&, double t_end, double dt, RngStream& rng);
SwitchSim simulate_switch(const SwitchSpec&, double t_end, double dt, RngStream& rng);
TwoCompSim simulate_twocomp(const TwoCompSpec&, double t_end, double dt, RngStream& rng);

using ModelSpec =
    std::variant<LambdaDiffusionSpec, MuBMSpec, WedgeSpec, SwitchSpec, TwoCompSpec>;
using SimResult = std::variant<QueueDiffusionSim, WedgeSim, SwitchSim, TwoCompSim>;
SimResult simulate_model(const ModelSpec&, double t_end, double dt, RngStream& rng);

}  // namespace renv::hybrid
