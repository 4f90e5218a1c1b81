#include "renv/fixtures.hpp"

#include <cmath>
#include <stdexcept>

namespace renv::fixtures {

namespace {

jackson::NetworkSpec two_site_net_a() {
  jackson::NetworkSpec s;
  s.sites = {"a", "b"};
  s.arrival = Eigen::Vector2d(1.0, 0.0);
  s.service = Eigen::Vector2d(4.0, 2.0);
  s.routing = Eigen::Matrix2d{{0.0, 0.5}, {0.0, 0.0}};
  return s;
}

jackson::NetworkSpec two_site_net_b() {
  jackson::NetworkSpec s;
  s.sites = {"a", "b"};
  s.arrival = Eigen::Vector2d(0.5, 0.5);
  s.service = Eigen::Vector2d(2.0, 4.0);
  s.routing = Eigen::Matrix2d{{0.0, 0.25}, {0.25, 0.0}};
  return s;
}

jackson::NetworkSpec single_site_net(double lam, double mu) {
  jackson::NetworkSpec s;
  s.sites = {"q"};
  s.arrival = Eigen::VectorXd::Constant(1, lam);
  s.service = Eigen::VectorXd::Constant(1, mu);
  s.routing = Eigen::MatrixXd::Zero(1, 1);
  return s;
}

const sde::Interval kZRect = sde::bounded(1.0, 2.0);
const sde::Interval kXRect = sde::bounded(-1.0, 1.0);

}  // namespace

const std::vector<FixtureInfo>& catalog() {
  static const std::vector<FixtureInfo> all = {
      {"thm-2.1-two-site", "Thm 2.1", "jackson",
       "two queues, two environment states, occupancy-damped switching"},
      {"thm-2.1-single-env", "Thm 2.1 / Eq 2.3", "jackson",
       "one environment state: plain product-form network"},
      {"remark-2.1-frozen-env", "Remark 2.1", "jackson",
       "alpha = 0: closed environment slices at fixed occupancy"},
      {"remark-2.3-factored-tau", "Remark 2.3 / Eqs 2.9-2.11", "jackson",
       "factored switching rates and the boundedness diagnostic"},
      {"thm-3.1-two-site-exclusion", "Thm 3.1", "exclusion",
       "two-site chain with births, deaths and a biased walker"},
      {"thm-3.1-2x2-exclusion", "Thm 3.1", "exclusion",
       "2x2 lattice, walker allowed everywhere"},
      {"thm-5.1-lambda-sigma-damped", "Thm 5.1", "hybrid.lambda",
       "arrival rate diffusing on (1/2, 1), sigma = 1/(1 - lam)"},
      {"thm-5.1-lambda-sigma-const", "Thm 5.1", "hybrid.lambda",
       "sigma = 1: the normalizer diverges"},
      {"thm-5.2-mu-drifted-bm", "Thm 5.2", "hybrid.mu",
       "service rate as drifted Brownian motion on (1, inf)"},
      {"thm-5.3-wedge", "Thm 5.3", "hybrid.wedge",
       "(lam, mu) diffusing in the ordered wedge, drift -1"},
      {"thm-5.4-drift-switch", "Thm 5.4", "hybrid.switch",
       "two-point drift switching on a reflected interval"},
      {"sec-5C-two-component", "Sec 5.C", "hybrid.twocomp",
       "scaled Wiener base with a reflected environment"},
      {"thm-6.1-model-B-rectangle", "Thm 6.1 / Eq 6.13", "ouenv.B",
       "reflected drifted BM environment on [1,2] x [-1,1]"},
      {"thm-6.1-model-C-rectangle", "Thm 6.1 / Eq 6.17", "ouenv.C",
       "mean-reverting environment on [1,2] x [-1,1]"},
      {"thm-6.1-model-D-rectangle", "Thm 6.1 / Eq 6.21", "ouenv.D",
       "square-root environment (a = b = 1) on [1,2] x [-1,1]"},
  };
  return all;
}

const FixtureInfo* find(const std::string& id) {
  for (const auto& f : catalog())
    if (f.id == id) return &f;
  return nullptr;
}

jackson::EnvironmentSpec jackson_two_site_two_env() {
  jackson::EnvironmentSpec env;
  env.envs = {"1", "2"};
  env.networks = {two_site_net_a(), two_site_net_b()};
  env.alpha = {1.0, 2.0};
  env.sigma = {1.0, 3.0};
  env.tau = [](const jackson::QueueState& n, int z, int z2) {
    return z == z2 ? 0.0 : 1.0 / (1.0 + n.sum());
  };
  env.tau_h = [](const jackson::QueueState& n) { return 1.0 / (1.0 + n.sum()); };
  env.tau_bar = Eigen::Matrix2d{{0.0, 1.0}, {1.0, 0.0}};
  return env;
}

jackson::EnvironmentSpec jackson_single_env() {
  jackson::EnvironmentSpec env;
  env.envs = {"only"};
  env.networks = {two_site_net_a()};
  env.alpha = {1.0};
  env.sigma = {1.0};
  env.tau = [](const jackson::QueueState&, int, int) { return 0.0; };
  return env;
}

jackson::EnvironmentSpec jackson_frozen_env() {
  auto env = jackson_two_site_two_env();
  env.alpha = {0.0, 0.0};
  return env;
}

jackson::EnvironmentSpec jackson_factored_tau() {
  jackson::EnvironmentSpec env;
  env.envs = {"1", "2"};
  env.networks = {single_site_net(0.5, 1.0), single_site_net(0.25, 1.0)};
  env.alpha = {1.0, 1.0};
  env.sigma = {1.0, 1.0};
  // h(n) = S(n)^{-1} with S(n) = sup_z prod (mu/rho)^{n}; loads 1/2 and 1/4
  env.tau_h = [](const jackson::QueueState& n) { return std::pow(0.25, n.sum()); };
  env.tau_bar = Eigen::Matrix2d{{0.0, 1.0}, {1.0, 0.0}};
  env.tau = [](const jackson::QueueState& n, int z, int z2) {
    return z == z2 ? 0.0 : std::pow(0.25, n.sum());
  };
  return env;
}

void exclusion_two_site(exclusion::LatticeSpec& lattice, exclusion::HeavyParams& params) {
  lattice = exclusion::make_chain(2);
  params.phi = std::log(2.0);
  params.birth = 1.0;
  params.death = 1.0;
  params.alpha = {1.0, 1.0};
  params.sigma = {1.0, 1.0};
}

void exclusion_grid_2x2(exclusion::LatticeSpec& lattice, exclusion::HeavyParams& params) {
  lattice = exclusion::make_grid(2, 2);
  params.phi = std::log(2.0);
  params.birth = 1.0;
  params.death = 1.0;
  params.alpha = {1.0, 1.0, 1.0, 1.0};
  params.sigma = {1.0, 2.0, 1.0, 1.0};
}

hybrid::LambdaDiffusionSpec lambda_damped() {
  hybrid::LambdaDiffusionSpec s;
  s.eps = 0.5;
  s.beta = [](int n) { return 0.8 * std::pow(0.68, n); };
  s.sigma = [](double lam) { return 1.0 / (1.0 - lam); };
  s.alpha = [](double lam) {
    return std::min(1.0 / ((1.0 - lam) * (1.0 - lam)), 400.0);
  };
  return s;
}

hybrid::LambdaDiffusionSpec lambda_const_sigma() {
  auto s = lambda_damped();
  s.sigma = [](double) { return 1.0; };
  s.alpha = [](double) { return 1.0; };
  return s;
}

hybrid::MuBMSpec mu_drifted_bm() {
  hybrid::MuBMSpec s;
  s.drift = 0.1;
  s.sigma = [](double) { return 1.0; };
  s.alpha = [](double) { return 1.0; };
  return s;
}

hybrid::WedgeSpec wedge_default() {
  hybrid::WedgeSpec s;
  s.theta = -1.0;
  s.sigma = [](double, double) { return 1.0; };
  s.alpha = [](double, double) { return 1.0; };
  return s;
}

hybrid::SwitchSpec switch_two_point() {
  hybrid::SwitchSpec s;
  s.jump = [](double, int i, int j) { return i == j ? 0.0 : 1.0; };
  s.alpha = [](double) { return 1.0; };
  s.sigma = [](double) { return 1.0; };
  s.x_domain = sde::bounded(-1.0, 1.0);
  return s;
}

hybrid::TwoCompSpec twocomp_default() {
  hybrid::TwoCompSpec s;
  s.alpha = [](double) { return 1.0; };
  s.sigma = [](double z) { return 1.0 + z * z; };
  s.drift = 0.0;
  s.dim = 1;
  s.c_lower = 1e-4;
  s.c_upper = 2.0;
  return s;
}

double ou_model_b_drift() { return -1.0; }

ouenv::CombinedDiffusionSpec ou_model_b() {
  return ouenv::make_model_b(ou_model_b_drift(), kZRect, kXRect);
}

ouenv::CombinedDiffusionSpec ou_model_c() { return ouenv::make_model_c(kZRect, kXRect); }

ouenv::ModelDParams ou_model_d_params() { return {1.0, 1.0}; }

ouenv::CombinedDiffusionSpec ou_model_d() {
  return ouenv::make_model_d(ou_model_d_params(), kZRect, kXRect);
}

}  // namespace renv::fixtures
