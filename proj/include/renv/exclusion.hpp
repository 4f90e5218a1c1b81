#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "renv/ctmc.hpp"

namespace renv::exclusion {

// Occupancy configuration as a bitmask over site indices (|S| <= 20).
using Occupancy = std::uint32_t;

// Finite lattice: symmetric exchange weights over sites, a subset of
// allowed walker positions, and a symmetric walk-rate matrix on it.
struct LatticeSpec {
  std::vector<std::array<int, 2>> sites;  // coordinates, d <= 2
  Eigen::MatrixXd beta;                   // symmetric, zero diagonal
  std::vector<int> heavy_sites;           // indices into sites
  Eigen::MatrixXd tau;                    // indexed by heavy position, symmetric
};

struct HeavyParams {
  double phi = 0;    // attraction (> 0) / repulsion (< 0) exponent
  double birth = 1;  // > 0
  double death = 1;  // > 0
  std::vector<double> alpha;  // per heavy position, > 0
  std::vector<double> sigma;  // per heavy position, > 0
};

struct Marginals {
  double p0 = 0, p1 = 0;  // plain site
  double q0 = 0, q1 = 0;  // site under the walker
};

struct ExactCheckReport {
  double l1_error = 0;        // stationary solve vs normalized product weight
  double solve_residual = 0;  // |pi Q|_inf from the solver
  int states = 0;
};

void validate(const LatticeSpec& lattice, const HeavyParams& params);

Marginals marginals(const HeavyParams& params);

// Occupation-density ratio (lam+mu)/(lam e^phi + mu) * e^{x_z phi}.
double density_m(const HeavyParams& params, int z_site, Occupancy x);

// Product weight of configuration x with the walker at site z_site.
double product_weight(const HeavyParams& params, int n_sites, int z_site, Occupancy x);

// All 2^n weights, indexed by bitmask; sums to 1.
Eigen::VectorXd product_measure(const HeavyParams& params, int n_sites, int z_site);

std::string config_label(int heavy_index, Occupancy x, int n_sites);
std::pair<int, Occupancy> parse_config_label(const std::string& label);

// Full jump kernel: exchanges (biased by e^phi into the walker site),
// births/deaths, and walker moves damped by e^{-x_z phi}.
ctmc::RateKernel combined_kernel(const LatticeSpec& lattice, const HeavyParams& params);

// Invariant weight e^{x_z phi} * prod_i P(x_i) / sigma(z).
double kappa(const LatticeSpec& lattice, const HeavyParams& params, int heavy_index,
             Occupancy x);

// Enumerates the full combined space, solves the stationary vector and
// compares with normalized kappa.
ExactCheckReport exact_check(const LatticeSpec& lattice, const HeavyParams& params);

// Nearest-neighbor chain/grid builders with unit rates; every site is an
// allowed walker position.
LatticeSpec make_chain(int n);
LatticeSpec make_grid(int nx, int ny);

}  // namespace renv::exclusion
