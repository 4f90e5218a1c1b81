#include <doctest.h>

#include <cmath>

#include "renv/numerics.hpp"
#include "renv/ouenv.hpp"
#include "renv/stationarity.hpp"

using namespace renv;
using ouenv::CombinedDiffusionSpec;

namespace {

const sde::Interval kZ = sde::bounded(1.0, 2.0);
const sde::Interval kX = sde::bounded(-1.0, 1.0);

CombinedDiffusionSpec model_b() { return ouenv::make_model_b(-1.0, kZ, kX); }
CombinedDiffusionSpec model_c() { return ouenv::make_model_c(kZ, kX); }
CombinedDiffusionSpec model_d() { return ouenv::make_model_d({1.0, 1.0}, kZ, kX); }

}  // namespace

TEST_CASE("make_model coefficient tables") {
  auto b0 = ouenv::make_model_b(0.0, kZ, kX);
  CHECK(b0.env_density(0.3) == doctest::Approx(1.0));  // Lebesgue when drift = 0
  CHECK(b0.base_drift(0.7) == doctest::Approx(-0.7));
  CHECK(b0.env_diffusion(1.5) == doctest::Approx(1.0));

  auto d = ouenv::make_model_d({1.0, 1.0}, kZ, kX);
  CHECK(d.env_density(0.5) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(d.env_drift(0.25) == doctest::Approx(0.75));
  CHECK(d.env_diffusion(0.8) == doctest::Approx(0.8));

  auto c = ouenv::make_model_c(kZ, kX);
  CHECK(c.env_density(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(c.env_drift(1.0) == doctest::Approx(-1.0));

  CHECK_THROWS_AS(ouenv::make_model_d({1.0, -1.0}, kZ, kX), std::invalid_argument);
}

TEST_CASE("apply_r on polynomial probes") {
  ouenv::TestFunction constant{"const", [](double, double) { return 3.0; },
                               nullptr, nullptr, nullptr, nullptr};
  CHECK(ouenv::apply_r(model_c(), constant, 1.3, 0.4) == doctest::Approx(0.0).epsilon(1e-8));

  ouenv::TestFunction xsq{"xsq", [](double, double x) { return x * x; },
                          [](double, double x) { return 2.0 * x; },
                          [](double, double) { return 2.0; },
                          [](double, double) { return 0.0; },
                          [](double, double) { return 0.0; }};
  // -x * 2x + z^2 at (1, 0.5)
  CHECK(ouenv::apply_r(model_c(), xsq, 1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));

  ouenv::TestFunction zlin{"z", [](double z, double) { return z; },
                           [](double, double) { return 0.0; },
                           [](double, double) { return 0.0; },
                           [](double, double) { return 1.0; },
                           [](double, double) { return 0.0; }};
  // model B at (2, 0): density is 1 there, so R phi = drift
  CHECK(ouenv::apply_r(model_b(), zlin, 2.0, 0.0) == doctest::Approx(-1.0).epsilon(1e-12));

  // finite differences agree with analytic partials
  ouenv::TestFunction fd_xsq{"fd", [](double, double x) { return x * x; },
                             nullptr, nullptr, nullptr, nullptr};
  CHECK(ouenv::apply_r(model_c(), fd_xsq, 1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("density underflow guard") {
  auto wide = ouenv::make_model_c(sde::bounded(0.02, 2.0), sde::bounded(-60.0, 60.0));
  ouenv::TestFunction zlin{"z", [](double z, double) { return z; },
                           [](double, double) { return 0.0; },
                           [](double, double) { return 0.0; },
                           [](double, double) { return 1.0; },
                           [](double, double) { return 0.0; }};
  CHECK_THROWS_AS(ouenv::apply_r(wide, zlin, 0.02, 60.0), std::runtime_error);
}

TEST_CASE("base adjoint residual") {
  for (auto spec : {model_b(), model_c(), model_d()})
    for (double z : {1.1, 1.5, 1.9})
      for (double x : {-0.7, 0.0, 0.7})
        CHECK(std::abs(ouenv::adjoint_residual_base(spec, z, x)) < 1e-6);

  // wrong density: e^{-x^2} with z = 2 does not satisfy the balance
  auto wrong = model_c();
  wrong.density = [](double, double x) { return std::exp(-x * x); };
  CHECK(std::abs(ouenv::adjoint_residual_base(wrong, 2.0, 0.7)) > 1e-3);
}

TEST_CASE("environment adjoint residual") {
  for (auto spec : {model_b(), model_c(), model_d()})
    for (double z : {0.7, 1.2, 1.8})
      CHECK(std::abs(ouenv::adjoint_residual_env(spec, z)) < 1e-6);

  auto wrong = model_d();
  wrong.env_density = [](double z) { return std::pow(z, 1.3) * std::exp(-2.0 * z); };
  CHECK(std::abs(ouenv::adjoint_residual_env(wrong, 0.7)) > 1e-3);
}

TEST_CASE("kappa_density model values") {
  CHECK(ouenv::kappa_density(model_c(), 1.0, 0.0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(ouenv::kappa_density(ouenv::make_model_b(0.0, kZ, kX), 1.7, 0.0) ==
        doctest::Approx(1.0));
  CHECK(ouenv::kappa_density(model_d(), 1.0, 0.0) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("quadrature form vanishes on the reflecting family") {
  for (auto spec : {model_b(), model_c(), model_d()}) {
    auto report =
        ouenv::wie_quadrature(spec, ouenv::neumann_test_family(spec.z_domain, spec.x_domain));
    CHECK(report.max_abs < 1e-6);
    CHECK(report.per_function.size() == 6);
  }
}

TEST_CASE("boundary-violating probe produces flux") {
  for (auto spec : {model_b(), model_c(), model_d()}) {
    auto report = ouenv::wie_quadrature(spec, {ouenv::exp_x_function()});
    CHECK(report.max_abs > 1e-3);
  }
}

TEST_CASE("conditional second-moment identity on the unbounded domain") {
  // For the x^2 probe the form reduces to E[-2x^2 + z^2 | z] = 0 under the
  // full Gaussian; integrate the full-plane density directly.
  auto c = model_c();
  const double v = 2.0 * num::integrate2d_or_throw(
                             [&](double z, double x) {
                               return (-2.0 * x * x + z * z) *
                                      std::exp(-z * z - x * x / (z * z));
                             },
                             1e-3, 8.0, -40.0, 40.0, 1e-9);
  (void)c;
  CHECK(std::abs(v) < 1e-8);
}

TEST_CASE("gaussian transition density") {
  // normalization for assorted (t, z)
  for (double t : {0.1, 1.0, 5.0})
    for (double z : {0.5, 1.0, 2.0}) {
      const double mass = num::integrate(
                              [&](double x1) { return ouenv::density_ou(t, 0.3, x1, z); },
                              -40.0, 40.0, 1e-12)
                              .value;
      CHECK(std::abs(mass - 1.0) < 1e-10);
    }

  // long-time peak 1/sqrt(pi)
  CHECK(ouenv::density_ou(40.0, 0.0, 0.0, 1.0) ==
        doctest::Approx(1.0 / std::sqrt(3.141592653589793)).epsilon(1e-10));

  // reversibility with respect to the speed density
  const double t = 1.0, z = 1.0, x = 0.5, x1 = -0.2;
  auto m = [&](double u) { return std::exp(-u * u / (z * z)); };
  CHECK(m(x) * ouenv::density_ou(t, x, x1, z) ==
        doctest::Approx(m(x1) * ouenv::density_ou(t, x1, x, z)).epsilon(1e-12));

  // Chapman-Kolmogorov at s = t = 0.5
  const double direct = ouenv::density_ou(1.0, 0.5, -0.2, 1.0);
  const double chained = num::integrate(
                             [&](double y) {
                               return ouenv::density_ou(0.5, 0.5, y, 1.0) *
                                      ouenv::density_ou(0.5, y, -0.2, 1.0);
                             },
                             -30.0, 30.0, 1e-12)
                             .value;
  CHECK(std::abs(direct - chained) < 1e-8);
}

TEST_CASE("square-root diffusion transition density") {
  const double a = 1.0, b = 1.0;
  // normalization
  const double mass = num::integrate(
                          [&](double z1) { return ouenv::density_cir(1.0, 1.0, z1, a, b); },
                          1e-10, 40.0, 1e-10)
                          .value;
  CHECK(std::abs(mass - 1.0) < 1e-8);

  // long-time limit is the gamma law with shape 2ab and rate 2a
  const double q = 2.0 * a * b;
  for (double z1 : {0.3, 0.8, 1.5, 3.0}) {
    const double gamma_pdf = std::pow(2.0 * a, q) * std::pow(z1, q - 1.0) *
                             std::exp(-2.0 * a * z1) / std::tgamma(q);
    CHECK(ouenv::density_cir(50.0, 1.0, z1, a, b) ==
          doctest::Approx(gamma_pdf).epsilon(1e-6));
  }

  // Chapman-Kolmogorov at s = t = 0.5
  const double direct = ouenv::density_cir(1.0, 1.0, 0.8, a, b);
  const double chained = num::integrate(
                             [&](double y) {
                               return ouenv::density_cir(0.5, 1.0, y, a, b) *
                                      ouenv::density_cir(0.5, y, 0.8, a, b);
                             },
                             1e-10, 40.0, 1e-10)
                             .value;
  CHECK(std::abs(direct - chained) < 1e-6);
}

TEST_CASE("reflected-BM density oracle stays behind its gate") {
  auto gate = ouenv::validate_density_rbm(-1.0, 1.0, 0.7);
  // the gate outcome is reported, not asserted: record both branches
  if (gate.enabled)
    CHECK(std::abs(gate.integral - 1.0) < 1e-3);
  else
    CHECK(std::abs(gate.integral - 1.0) >= 1e-3);
  CHECK(!gate.note.empty());
}

TEST_CASE("rectangle simulation: local times and step guard") {
  auto spec = model_c();
  RngStream rng(202);
  auto sim = ouenv::simulate_rect_system(spec, 1.5, 0.0, 50.0, 1e-3, rng);
  for (std::size_t i = 1; i < sim.z.value.size(); ++i) {
    CHECK(sim.z.value[i] >= 1.0);
    CHECK(sim.z.value[i] <= 2.0);
    CHECK(sim.x.value[i] >= -1.0);
    CHECK(sim.x.value[i] <= 1.0);
    CHECK(sim.z.ltime_lo[i] >= sim.z.ltime_lo[i - 1]);
    CHECK(sim.z.ltime_hi[i] >= sim.z.ltime_hi[i - 1]);
    CHECK(sim.x.ltime_lo[i] >= sim.x.ltime_lo[i - 1]);
    CHECK(sim.x.ltime_hi[i] >= sim.x.ltime_hi[i - 1]);
  }
  CHECK_THROWS_AS(ouenv::simulate_rect_system(spec, 1.5, 0.0, 1.0, 0.5, rng),
                  std::invalid_argument);
}

TEST_CASE("frozen environment gives the truncated gaussian marginal") {
  // pin z by shrinking its diffusion and drift to zero
  auto spec = model_c();
  spec.env_drift = [](double) { return 0.0; };
  spec.env_diffusion = [](double) { return 1e-12; };
  const double z = 1.4;
  RngStream rng(993);
  auto sim = ouenv::simulate_rect_system(spec, z, 0.0, 4000.0, 1e-3, rng);
  auto hist = stationarity::make_histogram(-1.0, 1.0, 20);
  for (std::size_t i = sim.x.value.size() / 10; i < sim.x.value.size(); ++i)
    hist.add(sim.x.value[i]);
  Eigen::VectorXd target(20);
  for (int b = 0; b < 20; ++b)
    target[b] = num::integrate(
                    [&](double x) { return std::exp(-x * x / (z * z)); },
                    hist.edges[b], hist.edges[b + 1], 1e-12)
                    .value;
  CHECK(stationarity::tv_distance(hist.normalized(), target / target.sum()) < 0.05);
}

TEST_CASE("grid chain reproduces the invariant density") {
  auto spec = model_c();
  const int nz = 40, nx = 40;  // coarse but fast; the acceptance suite runs 60x60
  auto [space, kernel] = ouenv::grid_generator(spec, nz, nx);
  auto gen = ctmc::build_generator(space, kernel);
  auto sol = ctmc::stationary_solve(gen, space);

  Eigen::VectorXd target(space.size());
  for (int i = 0; i < space.size(); ++i) {
    const auto& label = space.label(i);
    const auto pos = label.find(',');
    const int iz = std::stoi(label.substr(0, pos));
    const int ix = std::stoi(label.substr(pos + 1));
    const auto [z, x] = ouenv::grid_center(spec, nz, nx, iz, ix);
    target[i] = ouenv::kappa_density(spec, z, x);
  }
  target /= target.sum();
  CHECK((sol.pi - target).cwiseAbs().sum() < 0.05);
}
