#include <doctest.h>

#include <cmath>

#include "renv/hybrid.hpp"
#include "renv/numerics.hpp"
#include "renv/stationarity.hpp"

using namespace renv;
using hybrid::LambdaDiffusionSpec;
using hybrid::MuBMSpec;
using hybrid::SwitchSpec;
using hybrid::TwoCompSpec;
using hybrid::WedgeSpec;

namespace {

LambdaDiffusionSpec lambda_spec(double eps, bool damped_sigma) {
  LambdaDiffusionSpec s;
  s.eps = eps;
  s.beta = [](int n) { return 0.6 * std::pow(0.7, n); };
  if (damped_sigma)
    s.sigma = [](double lam) { return 1.0 / (1.0 - lam); };
  else
    s.sigma = [](double) { return 1.0; };
  s.alpha = [](double) { return 1.0; };
  return s;
}

MuBMSpec mu_spec(double b) {
  MuBMSpec s;
  s.drift = b;
  s.sigma = [](double) { return 1.0; };
  s.alpha = [](double) { return 1.0; };
  return s;
}

WedgeSpec wedge_spec(double theta) {
  WedgeSpec s;
  s.theta = theta;
  s.sigma = [](double, double) { return 1.0; };
  s.alpha = [](double, double) { return 1.0; };
  return s;
}

SwitchSpec two_point_switch(bool bounded) {
  SwitchSpec s;
  s.jump = [](double, int i, int j) { return i == j ? 0.0 : 1.0; };  // q(x) = 1
  s.alpha = [](double) { return 1.0; };
  s.sigma = [](double) { return 1.0; };
  if (bounded) s.x_domain = sde::bounded(-1.0, 1.0);
  return s;
}

}  // namespace

TEST_CASE("kappa_lambda plain values") {
  auto flat = lambda_spec(0.25, false);
  CHECK(hybrid::kappa_lambda(flat, 0.7, 0) == doctest::Approx(1.0));

  auto damped = lambda_spec(0.25, true);
  CHECK(hybrid::kappa_lambda(damped, 0.5, 2) == doctest::Approx(0.125).epsilon(1e-12));

  // integral of the n = 1 density over the domain
  const double eps = 0.25;
  const double mass = num::integrate(
                          [&](double lam) { return hybrid::kappa_lambda(flat, lam, 1); },
                          eps + 1e-12, 1.0 - 1e-12, 1e-12)
                          .value;
  CHECK(mass == doctest::Approx((1.0 - eps * eps) / 2.0).epsilon(1e-8));

  // beta and alpha never enter the density
  auto other = flat;
  other.beta = [](int) { return 3.0; };
  other.alpha = [](double) { return 17.0; };
  CHECK(hybrid::kappa_lambda(other, 0.7, 3) ==
        doctest::Approx(hybrid::kappa_lambda(flat, 0.7, 3)).epsilon(1e-14));
}

TEST_CASE("xi_lambda telescoping and divergence") {
  auto damped = lambda_spec(0.5, true);
  auto r = hybrid::xi_lambda(damped);
  CHECK(r.finite);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-8));

  auto near_one = lambda_spec(0.99, true);
  auto r2 = hybrid::xi_lambda(near_one);
  CHECK(r2.finite);
  CHECK(r2.value == doctest::Approx(0.01).epsilon(1e-6));

  auto flat = lambda_spec(0.5, false);
  CHECK(!hybrid::xi_lambda(flat).finite);
}

TEST_CASE("lambda-model residuals vanish on a grid") {
  auto damped = lambda_spec(0.5, true);
  std::vector<double> grid;
  for (double l = 0.55; l < 0.99; l += 0.02) grid.push_back(l);
  auto r = hybrid::wie_check_lambda(damped, grid, 12);
  CHECK(r.max_diffusion < 1e-6);
  CHECK(r.max_recurrence < 1e-12);
}

TEST_CASE("mu-model recurrence and ODE residuals") {
  // sigma = 1, b = 0, n = 1, mu = 2: both sides of the recurrence are 1.5
  auto s0 = mu_spec(0.0);
  const double lhs = hybrid::kappa_mu(s0, 2.0, 1) * (1.0 + 2.0);
  const double rhs = hybrid::kappa_mu(s0, 2.0, 0) + 2.0 * hybrid::kappa_mu(s0, 2.0, 2);
  CHECK(lhs == doctest::Approx(1.5));
  CHECK(rhs == doctest::Approx(1.5));

  // the exponential cancels the drift term for every b
  for (double b : {-0.4, 0.1, 0.7})
    CHECK(std::abs(hybrid::ode_residual_mu(mu_spec(b), 1.7, 2)) < 1e-6);

  // grid sweep: recurrence at machine precision, ODE under 1e-6
  auto s = mu_spec(0.1);
  std::vector<double> grid;
  for (double mu = 1.01; mu <= 10.0; mu += 0.01) grid.push_back(mu);
  auto r = hybrid::wie_check_mu(s, grid, 20);
  CHECK(r.max_recurrence < 1e-12);
  CHECK(r.max_diffusion < 1e-6);

  // perturbed exponent is caught
  CHECK(std::abs(hybrid::ode_residual_mu(mu_spec(0.5), 2.0, 1, 1.05)) > 1e-4);
}

TEST_CASE("xi_mu") {
  // sigma = mu/(mu-1), b = -1/2 gives the unit-mass integrand e^{-(mu-1)}
  MuBMSpec s = mu_spec(-0.5);
  s.sigma = [](double mu) { return mu / (mu - 1.0); };
  auto r = hybrid::xi_mu(s);
  CHECK(r.finite);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-8));

  CHECK(!hybrid::xi_mu(mu_spec(0.0)).finite);
  CHECK(!hybrid::xi_mu(mu_spec(-1.0)).finite);  // diverges at 1 for every drift

  // growing at infinity when the drift is positive
  MuBMSpec up = s;
  up.drift = 0.5;
  CHECK(!hybrid::xi_mu(up).finite);
}

TEST_CASE("kappa_wedge values") {
  auto w = wedge_spec(-1.0);
  CHECK(hybrid::kappa_wedge(w, 1.0, 1.0, 0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));

  auto w0 = wedge_spec(0.0);
  CHECK(hybrid::kappa_wedge(w0, 0.5, 1.0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  auto scaled = wedge_spec(0.0);
  scaled.sigma = [](double, double) { return 2.0; };
  CHECK(hybrid::kappa_wedge(scaled, 0.5, 1.0, 1) == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(hybrid::kappa_wedge(w, 2.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("wedge residuals and projection") {
  auto w = wedge_spec(-1.0);
  std::vector<std::pair<double, double>> grid;
  for (double lam = 0.2; lam <= 1.0; lam += 0.2)
    for (double mu = lam + 0.2; mu <= 2.0; mu += 0.2) grid.emplace_back(lam, mu);
  auto r = hybrid::wie_check_wedge(w, grid, 10);
  CHECK(r.max_diffusion < 1e-6);
  CHECK(r.max_recurrence < 1e-12);

  CHECK(hybrid::wedge_project(2.0, 1.0) == std::pair<double, double>{1.0, 2.0});
  CHECK(hybrid::wedge_project(1.0, 2.0) == std::pair<double, double>{1.0, 2.0});
}

TEST_CASE("xi_wedge closed form and divergence") {
  // sigma = mu/(mu - lam) cancels the diagonal factor: Xi = 1/(8 theta^2)
  WedgeSpec w = wedge_spec(-1.0);
  w.sigma = [](double lam, double mu) { return mu / (mu - lam); };
  auto r = hybrid::xi_wedge(w);
  CHECK(r.finite);
  CHECK(r.value == doctest::Approx(0.125).epsilon(1e-6));

  CHECK(!hybrid::xi_wedge(wedge_spec(-1.0)).finite);  // diagonal blow-up
}

TEST_CASE("covering simulation matches direct wedge simulation") {
  auto w = wedge_spec(-1.0);
  RngStream r1(100), r2(200);
  auto direct = hybrid::simulate_wedge(w, 2000.0, 1e-3, r1);
  auto covering = hybrid::simulate_wedge_covering(w, 2000.0, 1e-3, r2);

  auto moments = [](const hybrid::WedgeSim& sim) {
    const std::size_t burn = sim.lam.value.size() / 5;
    double ml = 0, mm = 0;
    for (std::size_t i = burn; i < sim.lam.value.size(); ++i) {
      ml += sim.lam.value[i];
      mm += sim.mu.value[i];
    }
    const double n = static_cast<double>(sim.lam.value.size() - burn);
    return std::pair<double, double>{ml / n, mm / n};
  };
  auto [dl, dm] = moments(direct);
  auto [cl, cm] = moments(covering);
  CHECK(std::abs(dl - cl) < 0.03);
  CHECK(std::abs(dm - cm) < 0.04);
}

TEST_CASE("kappa_switch values and balance") {
  auto s = two_point_switch(false);
  CHECK(hybrid::kappa_switch(s, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(hybrid::kappa_switch(s, -1.0, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  std::vector<double> xs;
  for (double x = -2.0; x <= 2.0; x += 0.25) xs.push_back(x);
  auto r = hybrid::wie_check_switch(s, xs);
  CHECK(r.max_env_balance < 1e-12);
  CHECK(r.max_base_adjoint < 1e-6);
  CHECK(hybrid::check_switch_invariance(s, xs).empty());

  // biased kernel breaks the weighted symmetry
  auto biased = s;
  biased.jump = [](double, int i, int j) {
    if (i == j) return 0.0;
    return i == 0 ? 2.0 : 1.0;
  };
  CHECK(!hybrid::check_switch_invariance(biased, xs).empty());
}

TEST_CASE("xi_switch finite only on a bounded base domain") {
  CHECK(!hybrid::xi_switch(two_point_switch(false)).finite);
  auto r = hybrid::xi_switch(two_point_switch(true));
  CHECK(r.finite);
  // both support points contribute int_{-1}^{1} e^{2zx} dx = sinh(2)
  CHECK(r.value == doctest::Approx(2.0 * std::sinh(2.0)).epsilon(1e-10));
}

TEST_CASE("two-component spec: bounds and normalizer") {
  TwoCompSpec s;
  s.alpha = [](double) { return 1.0; };
  s.sigma = [](double z) { return 1.0 + z * z; };
  s.drift = 0.0;
  s.c_lower = 1e-4;
  s.c_upper = 2.0;
  std::vector<double> zg;
  for (double z = 0.1; z <= 5.0; z += 0.1) zg.push_back(z);
  CHECK(hybrid::validate_twocomp(s, zg).empty());
  CHECK(!hybrid::xi_twocomp(s).finite);  // Lebesgue base measure: never finite
  CHECK(hybrid::kappa_twocomp(s, 1.0) == doctest::Approx(0.5));

  // alpha does not enter kappa
  auto other = s;
  other.alpha = [](double) { return 42.0; };
  CHECK(hybrid::kappa_twocomp(other, 0.7) ==
        doctest::Approx(hybrid::kappa_twocomp(s, 0.7)).epsilon(1e-14));

  TwoCompSpec bad = s;
  bad.sigma = [](double z) { return 10.0 * (1.0 + z * z); };
  CHECK(!hybrid::validate_twocomp(bad, zg).empty());
}

TEST_CASE("densities ignore the task time scale in every family") {
  // mu, wedge and switch: rebuild with a rescaled alpha and compare
  auto mu1 = mu_spec(0.2), mu2 = mu_spec(0.2);
  mu2.alpha = [](double) { return 31.0; };
  CHECK(hybrid::kappa_mu(mu1, 1.7, 3) == doctest::Approx(hybrid::kappa_mu(mu2, 1.7, 3)));

  auto w1 = wedge_spec(-0.5), w2 = wedge_spec(-0.5);
  w2.alpha = [](double, double) { return 0.01; };
  CHECK(hybrid::kappa_wedge(w1, 0.4, 0.9, 2) ==
        doctest::Approx(hybrid::kappa_wedge(w2, 0.4, 0.9, 2)));

  auto s1 = two_point_switch(false), s2 = two_point_switch(false);
  s2.alpha = [](double) { return 7.0; };
  CHECK(hybrid::kappa_switch(s1, 1.0, 0.3) ==
        doctest::Approx(hybrid::kappa_switch(s2, 1.0, 0.3)));
}

TEST_CASE("beta summability warning") {
  auto good = lambda_spec(0.5, true);  // 0.36 * 0.49^n / 0.5^n decays
  CHECK(hybrid::check_beta_condition(good, 40).empty());

  auto bad = good;
  bad.beta = [](int n) { return std::pow(0.8, n); };  // 0.64^n / 0.5^n grows
  CHECK(!hybrid::check_beta_condition(bad, 40).empty());
}

TEST_CASE("frozen queue under alpha = 0") {
  auto s = lambda_spec(0.5, true);
  s.alpha = [](double) { return 0.0; };
  RngStream rng(5);
  auto sim = hybrid::simulate_lambda(s, 50.0, 1e-3, rng);
  for (int n : sim.queue) CHECK(n == 0);
  // the arrival-rate coordinate still moves
  double lo = 1e9, hi = -1e9;
  for (double v : sim.env.value) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo > 0.05);
}

TEST_CASE("lambda-model occupation matches the product density") {
  auto s = lambda_spec(0.5, true);
  s.beta = [](int n) { return 0.8 * std::pow(0.68, n); };  // still summable vs eps^n
  // the queue relaxes like (1 - lam)^{-2}; speed it up there (kappa is
  // alpha-independent, so the target law is unchanged)
  s.alpha = [](double lam) { return std::min(1.0 / ((1.0 - lam) * (1.0 - lam)), 400.0); };
  RngStream rng(31415);
  auto sim = hybrid::simulate_lambda(s, 2000.0, 2e-3, rng);  // 1e6 steps

  const int lam_bins = 8, n_max = 10;
  auto hist = stationarity::make_histogram2d(0.5, 1.0, lam_bins, -0.5, n_max + 0.5,
                                             n_max + 1);
  const std::size_t burn = sim.queue.size() / 10;
  for (std::size_t i = burn; i < sim.queue.size(); ++i)
    if (sim.queue[i] <= n_max) hist.add(sim.env.value[i], sim.queue[i]);

  Eigen::MatrixXd target(lam_bins, n_max + 1);
  for (int b = 0; b < lam_bins; ++b)
    for (int n = 0; n <= n_max; ++n)
      target(b, n) = num::integrate(
                         [&](double lam) { return std::pow(lam, n) * (1.0 - lam); },
                         hist.z_edges[b], hist.z_edges[b + 1], 1e-12)
                         .value;
  target /= target.sum();
  Eigen::MatrixXd emp = hist.counts / hist.counts.sum();
  CHECK(0.5 * (emp - target).cwiseAbs().sum() < 0.08);
}

TEST_CASE("switch-model x marginal matches the mixture density") {
  auto s = two_point_switch(true);
  RngStream rng(2718);
  auto sim = hybrid::simulate_switch(s, 1000.0, 1e-3, rng);  // 1e6 steps
  CHECK(sim.switches > 100);

  auto hist = stationarity::make_histogram(-1.0, 1.0, 20);
  const std::size_t burn = sim.x.value.size() / 10;
  for (std::size_t i = burn; i < sim.x.value.size(); ++i) hist.add(sim.x.value[i]);

  Eigen::VectorXd target(20);
  for (int b = 0; b < 20; ++b)
    target[b] = num::integrate(
                    [](double x) { return std::exp(2.0 * x) + std::exp(-2.0 * x); },
                    hist.edges[b], hist.edges[b + 1], 1e-12)
                    .value;
  CHECK(stationarity::tv_distance(hist.normalized(), target / target.sum()) < 0.08);
}

TEST_CASE("two-component simulation stays on the half line") {
  TwoCompSpec s;
  s.alpha = [](double) { return 1.0; };
  s.sigma = [](double) { return 1.0; };
  s.drift = -0.5;
  s.dim = 2;
  RngStream rng(11);
  auto sim = hybrid::simulate_twocomp(s, 100.0, 1e-3, rng);
  for (double z : sim.z.value) CHECK(z >= 0.0);
  for (std::size_t i = 1; i < sim.z.ltime_lo.size(); ++i)
    CHECK(sim.z.ltime_lo[i] >= sim.z.ltime_lo[i - 1]);
  CHECK(sim.base.rows() == static_cast<long>(sim.z.value.size()));
  CHECK(sim.base.cols() == 2);
}

TEST_CASE("simulate_model dispatches by family") {
  RngStream rng(3);
  auto out = hybrid::simulate_model(two_point_switch(true), 1.0, 1e-3, rng);
  CHECK(std::holds_alternative<hybrid::SwitchSim>(out));
  RngStream rng2(4);
  auto out2 = hybrid::simulate_model(lambda_spec(0.5, true), 1.0, 1e-3, rng2);
  CHECK(std::holds_alternative<hybrid::QueueDiffusionSim>(out2));
}
