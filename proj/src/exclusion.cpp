#include "renv/exclusion.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace renv::exclusion {

namespace {

bool occupied(Occupancy x, int site) { return (x >> site) & 1u; }
Occupancy flip(Occupancy x, int site) { return x ^ (1u << site); }

}  // namespace

void validate(const LatticeSpec& lattice, const HeavyParams& params) {
  const int n = static_cast<int>(lattice.sites.size());
  if (n == 0 || n > 20) throw std::invalid_argument("lattice: need 1..20 sites");
  if (lattice.beta.rows() != n || lattice.beta.cols() != n)
    throw std::invalid_argument("lattice: beta dimension mismatch");
  for (int i = 0; i < n; ++i) {
    if (lattice.beta(i, i) != 0.0) throw std::invalid_argument("lattice: beta diagonal must be 0");
    for (int j = 0; j < n; ++j) {
      if (lattice.beta(i, j) < 0) throw std::invalid_argument("lattice: beta must be >= 0");
      if (std::abs(lattice.beta(i, j) - lattice.beta(j, i)) > 1e-14)
        throw std::invalid_argument("lattice: beta must be symmetric");
    }
  }
  const int t = static_cast<int>(lattice.heavy_sites.size());
  if (t == 0) throw std::invalid_argument("lattice: empty walker position set");
  for (int s : lattice.heavy_sites)
    if (s < 0 || s >= n) throw std::invalid_argument("lattice: walker position out of range");
  if (lattice.tau.rows() != t || lattice.tau.cols() != t)
    throw std::invalid_argument("lattice: tau dimension mismatch");
  for (int i = 0; i < t; ++i) {
    if (lattice.tau(i, i) != 0.0) throw std::invalid_argument("lattice: tau diagonal must be 0");
    for (int j = 0; j < t; ++j)
      if (lattice.tau(i, j) < 0) throw std::invalid_argument("lattice: tau must be >= 0");
  }
  if (!(params.birth > 0) || !(params.death > 0))
    throw std::invalid_argument("params: birth and death rates must be > 0");
  if (params.alpha.size() != static_cast<std::size_t>(t) ||
      params.sigma.size() != static_cast<std::size_t>(t))
    throw std::invalid_argument("params: alpha/sigma must match walker position count");
  for (int i = 0; i < t; ++i)
    if (!(params.alpha[i] > 0) || !(params.sigma[i] > 0))
      throw std::invalid_argument("params: alpha and sigma must be > 0");
}

Marginals marginals(const HeavyParams& params) {
  const double lam = params.birth, mu = params.death, e = std::exp(params.phi);
  Marginals m;
  m.p1 = lam / (lam + mu);
  m.p0 = mu / (lam + mu);
  m.q1 = lam * e / (lam * e + mu);
  m.q0 = mu / (lam * e + mu);
  return m;
}

double density_m(const HeavyParams& params, int z_site, Occupancy x) {
  const double lam = params.birth, mu = params.death, e = std::exp(params.phi);
  const double scale = (lam + mu) / (lam * e + mu);
  return scale * (occupied(x, z_site) ? e : 1.0);
}

double product_weight(const HeavyParams& params, int n_sites, int z_site, Occupancy x) {
  const Marginals m = marginals(params);
  double w = 1.0;
  for (int i = 0; i < n_sites; ++i) {
    if (i == z_site)
      w *= occupied(x, i) ? m.q1 : m.q0;
    else
      w *= occupied(x, i) ? m.p1 : m.p0;
  }
  return w;
}

Eigen::VectorXd product_measure(const HeavyParams& params, int n_sites, int z_site) {
  Eigen::VectorXd w(1u << n_sites);
  for (Occupancy x = 0; x < (1u << n_sites); ++x)
    w[x] = product_weight(params, n_sites, z_site, x);
  return w;
}

std::string config_label(int heavy_index, Occupancy x, int n_sites) {
  std::string bits(n_sites, '0');
  for (int i = 0; i < n_sites; ++i)
    if (occupied(x, i)) bits[i] = '1';
  return std::to_string(heavy_index) + "|" + bits;
}

std::pair<int, Occupancy> parse_config_label(const std::string& label) {
  const auto pos = label.find('|');
  if (pos == std::string::npos)
    throw std::invalid_argument("config label '" + label + "' is not 'z|bits'");
  const int z = std::stoi(label.substr(0, pos));
  Occupancy x = 0;
  for (std::size_t i = pos + 1; i < label.size(); ++i)
    if (label[i] == '1') x |= 1u << (i - pos - 1);
  return {z, x};
}

ctmc::RateKernel combined_kernel(const LatticeSpec& lattice, const HeavyParams& params) {
  validate(lattice, params);
  auto lat = std::make_shared<const LatticeSpec>(lattice);
  auto par = std::make_shared<const HeavyParams>(params);
  const int n = static_cast<int>(lattice.sites.size());

  ctmc::RateKernel k;
  k.rate = [lat, par, n](const ctmc::Label& from, const ctmc::Label& to) -> double {
    const auto [zi, x] = parse_config_label(from);
    const auto [zj, y] = parse_config_label(to);
    const int z_site = lat->heavy_sites.at(zi);
    const double e_phi = std::exp(par->phi);

    if (zi != zj) {  // walker move, occupancies frozen
      if (x != y) return 0.0;
      const double damp = occupied(x, z_site) ? std::exp(-par->phi) : 1.0;
      return par->sigma[zi] * lat->tau(zi, zj) * damp;
    }
    if (x == y) return 0.0;
    const Occupancy diff = x ^ y;
    const int nbits = __builtin_popcount(diff);
    const double a = par->alpha[zi];
    if (nbits == 1) {
      const int site = __builtin_ctz(diff);
      if (!occupied(x, site)) {  // birth
        const double boost = site == z_site ? e_phi : 1.0;
        return a * par->birth * boost;
      }
      return a * par->death;  // death
    }
    if (nbits == 2) {  // exchange i -> j, extra e^phi when entering z_site
      const int s1 = __builtin_ctz(diff);
      const int s2 = __builtin_ctz(diff & ~(1u << s1));
      int from_site, to_site;
      if (occupied(x, s1) && !occupied(x, s2)) {
        from_site = s1;
        to_site = s2;
      } else if (occupied(x, s2) && !occupied(x, s1)) {
        from_site = s2;
        to_site = s1;
      } else {
        return 0.0;
      }
      const double boost = to_site == z_site ? e_phi : 1.0;
      return a * lat->beta(from_site, to_site) * boost;
    }
    return 0.0;
  };
  k.neighbors = [lat, n](const ctmc::Label& s) {
    const auto [zi, x] = parse_config_label(s);
    std::vector<ctmc::Label> out;
    for (int i = 0; i < n; ++i) out.push_back(config_label(zi, flip(x, i), n));
    for (int i = 0; i < n; ++i) {
      if (!occupied(x, i)) continue;
      for (int j = 0; j < n; ++j)
        if (lat->beta(i, j) > 0 && !occupied(x, j))
          out.push_back(config_label(zi, flip(flip(x, i), j), n));
    }
    for (int zj = 0; zj < static_cast<int>(lat->heavy_sites.size()); ++zj)
      if (zj != zi && (lat->tau(zi, zj) > 0 || lat->tau(zj, zi) > 0))
        out.push_back(config_label(zj, x, n));
    return out;
  };
  return k;
}

double kappa(const LatticeSpec& lattice, const HeavyParams& params, int heavy_index,
             Occupancy x) {
  const int n = static_cast<int>(lattice.sites.size());
  const int z_site = lattice.heavy_sites.at(heavy_index);
  const Marginals m = marginals(params);
  double gamma = 1.0;
  for (int i = 0; i < n; ++i) gamma *= occupied(x, i) ? m.p1 : m.p0;
  const double boost = occupied(x, z_site) ? std::exp(params.phi) : 1.0;
  return boost * gamma / params.sigma[heavy_index];
}

ExactCheckReport exact_check(const LatticeSpec& lattice, const HeavyParams& params) {
  validate(lattice, params);
  const int n = static_cast<int>(lattice.sites.size());
  if (n > 12) throw std::invalid_argument("exact_check: limited to 12 sites");
  const int t = static_cast<int>(lattice.heavy_sites.size());

  std::vector<ctmc::Label> labels;
  for (int z = 0; z < t; ++z)
    for (Occupancy x = 0; x < (1u << n); ++x) labels.push_back(config_label(z, x, n));
  const ctmc::StateSpace space(std::move(labels));

  const auto kernel = combined_kernel(lattice, params);
  const auto gen = ctmc::build_generator(space, kernel);
  const auto solved = ctmc::stationary_solve(gen, space);

  Eigen::VectorXd target(space.size());
  for (int i = 0; i < space.size(); ++i) {
    const auto [z, x] = parse_config_label(space.label(i));
    target[i] = kappa(lattice, params, z, x);
  }
  target /= target.sum();

  ExactCheckReport rep;
  rep.l1_error = (solved.pi - target).cwiseAbs().sum();
  rep.solve_residual = solved.residual;
  rep.states = space.size();
  return rep;
}

LatticeSpec make_chain(int n) {
  LatticeSpec lat;
  for (int i = 0; i < n; ++i) lat.sites.push_back({i, 0});
  lat.beta = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) lat.beta(i, i + 1) = lat.beta(i + 1, i) = 1.0;
  for (int i = 0; i < n; ++i) lat.heavy_sites.push_back(i);
  lat.tau = lat.beta;
  return lat;
}

LatticeSpec make_grid(int nx, int ny) {
  LatticeSpec lat;
  auto id = [nx](int ix, int iy) { return iy * nx + ix; };
  const int n = nx * ny;
  lat.beta = Eigen::MatrixXd::Zero(n, n);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      lat.sites.push_back({ix, iy});
      if (ix + 1 < nx) lat.beta(id(ix, iy), id(ix + 1, iy)) = 1.0;
      if (iy + 1 < ny) lat.beta(id(ix, iy), id(ix, iy + 1)) = 1.0;
    }
  lat.beta = Eigen::MatrixXd((lat.beta + lat.beta.transpose()).eval());
  for (int i = 0; i < n; ++i) lat.heavy_sites.push_back(i);
  lat.tau = lat.beta;
  return lat;
}

}  // namespace renv::exclusion
