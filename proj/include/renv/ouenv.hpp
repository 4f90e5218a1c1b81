#pragma once

#include <functional>
#include <string>
#include <vector>

#include "renv/ctmc.hpp"
#include "renv/rng.hpp"
#include "renv/sde.hpp"

namespace renv::ouenv {

// Two-component diffusion: mean-reverting base line process with squared
// environment value as volatility, environment diffusing on its own
// interval. The environment part of the combined generator is inflated
// by 1/density.
struct CombinedDiffusionSpec {
  std::function<double(double)> base_drift;     // a(x)
  std::function<double(double)> env_drift;      // c(z)
  std::function<double(double)> env_diffusion;  // C(z) > 0
  std::function<double(double, double)> density;     // m(z,x) > 0
  std::function<double(double)> env_density;         // w(z) > 0
  std::function<double(double)> alpha;               // defaults to 1
  std::function<double(double)> sigma;               // defaults to 1
  sde::Interval z_domain;
  sde::Interval x_domain;
};

enum class OuModel { B, C, D };

struct ModelDParams {
  double a = 1;  // reversion speed, >= 0
  double b = 1;  // level, > 0
};

// Rectangle geometries carry reflecting ends on both axes.
CombinedDiffusionSpec make_model_b(double drift, const sde::Interval& z_domain,
                                   const sde::Interval& x_domain);
CombinedDiffusionSpec make_model_c(const sde::Interval& z_domain,
                                   const sde::Interval& x_domain);
CombinedDiffusionSpec make_model_d(const ModelDParams& params,
                                   const sde::Interval& z_domain,
                                   const sde::Interval& x_domain);

// Test function with optional analytic partials; finite differences
// (h = 1e-5, central) fill the gaps.
struct TestFunction {
  std::string name;
  std::function<double(double, double)> f;
  std::function<double(double, double)> fx, fxx, fz, fzz;  // optional
};

double apply_r(const CombinedDiffusionSpec& spec, const TestFunction& phi, double z,
               double x);

// -d/dx(a m) + (z^2/2) d^2/dx^2 m, central differences.
double adjoint_residual_base(const CombinedDiffusionSpec& spec, double z, double x,
                             double h = 1e-4);
// -d/dz(c w) + (1/2) d^2/dz^2 (C w).
double adjoint_residual_env(const CombinedDiffusionSpec& spec, double z, double h = 1e-4);

double kappa_density(const CombinedDiffusionSpec& spec, double z, double x);

struct QuadratureReport {
  double max_abs = 0;
  std::vector<std::pair<std::string, double>> per_function;
};

// max over the family of |integral of (R phi) kappa| on the rectangle.
QuadratureReport wie_quadrature(const CombinedDiffusionSpec& spec,
                                const std::vector<TestFunction>& family,
                                double abs_tol = 1e-8);

// Product-cosine family with vanishing normal derivative on all edges.
std::vector<TestFunction> neumann_test_family(const sde::Interval& z_domain,
                                              const sde::Interval& x_domain);
TestFunction exp_x_function();  // violates the Neumann condition

// Transition density of the mean-reverting base process (normalized
// Gaussian, mean x e^{-t}, variance z^2 (1 - e^{-2t}) / 2).
double density_ou(double t, double x, double x1, double z);

// Square-root-diffusion transition density with Bessel-series kernel.
double density_cir(double t, double z, double z1, double a, double b);

// Reflected-drifted-BM density oracle, usable only behind its gate.
double density_rbm(double t, double z, double z1, double drift);
struct GateReport {
  double integral = 0;  // int density_rbm dz' at the probe point
  bool enabled = false;
  std::string note;
};
GateReport validate_density_rbm(double drift, double t, double z);

struct RectSim {
  sde::ReflectedPath z;
  sde::ReflectedPath x;
};

// Euler on the rectangle with mirror reflection; drifts and diffusions
// carry the 1/density inflation. Refuses steps that could traverse more
// than 10% of an edge per step.
RectSim simulate_rect_system(const CombinedDiffusionSpec& spec, double z0, double x0,
                             double t_end, double dt, RngStream& rng);

// Plain half-line square-root diffusion with full-truncation positivity.
sde::ReflectedPath simulate_cir(double a, double b, double z0, double t_end, double dt,
                                RngStream& rng);

// Upwinded finite-volume discretization of the combined generator on an
// nz x nx cell grid, as a jump chain (reflecting edges).
std::pair<ctmc::StateSpace, ctmc::RateKernel> grid_generator(
    const CombinedDiffusionSpec& spec, int nz, int nx);
std::string grid_label(int iz, int ix);
std::pair<double, double> grid_center(const CombinedDiffusionSpec& spec, int nz, int nx,
                                      int iz, int ix);

}  // namespace renv::ouenv
