#include <doctest.h>

#include <cmath>
#include <vector>

#include "renv/rng.hpp"
#include "renv/stationarity.hpp"

using namespace renv;
namespace st = renv::stationarity;

TEST_CASE("tv_distance basics and metric spot checks") {
  Eigen::Vector2d p(0.5, 0.5);
  CHECK(st::tv_distance(p, p) == doctest::Approx(0.0));

  Eigen::Vector2d a(1.0, 0.0), b(0.0, 1.0);
  CHECK(st::tv_distance(a, b) == doctest::Approx(1.0));

  Eigen::Vector2d u(0.6, 0.4), v(0.5, 0.5);
  CHECK(st::tv_distance(u, v) == doctest::Approx(0.1));

  // symmetry and triangle inequality on a fixture triple
  Eigen::Vector3d x(0.2, 0.3, 0.5), y(0.3, 0.3, 0.4), z(0.1, 0.6, 0.3);
  CHECK(st::tv_distance(x, y) == doctest::Approx(st::tv_distance(y, x)));
  CHECK(st::tv_distance(x, z) <= st::tv_distance(x, y) + st::tv_distance(y, z) + 1e-15);

  auto h1 = st::make_histogram(0, 1, 4);
  auto h2 = st::make_histogram(0, 2, 4);
  h1.add(0.5);
  h2.add(0.5);
  CHECK_THROWS_AS(st::tv_distance(h1, h2), std::invalid_argument);
}

TEST_CASE("chi2 calibration: sampling the tested density") {
  const auto gauss = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * 3.141592653589793); };
  int healthy = 0;
  for (int seed = 0; seed < 100; ++seed) {
    RngStream rng(1000 + seed);
    auto hist = st::make_histogram(-4.0, 4.0, 40);
    for (int i = 0; i < 20000; ++i) hist.add(rng.normal());
    auto r = st::chi2_test(hist, gauss);
    if (r.p_value > 0.01) ++healthy;
  }
  CHECK(healthy >= 98);
}

TEST_CASE("chi2 rejects a wrong shape") {
  RngStream rng(7);
  auto hist = st::make_histogram(0.0, 1.0, 20);
  for (int i = 0; i < 100000; ++i) {
    // triangular-ish data against a flat density
    const double u = rng.uniform();
    hist.add(std::sqrt(u));
  }
  auto r = st::chi2_test(hist, [](double) { return 1.0; });
  CHECK(r.p_value < 1e-6);
}

TEST_CASE("chi2 with no remaining degrees of freedom") {
  auto hist = st::make_histogram(0.0, 1.0, 3);
  hist.add(0.5);  // almost everything is sparse
  CHECK_THROWS_AS(st::chi2_test(hist, [](double) { return 1.0; }), std::runtime_error);
}

TEST_CASE("ks statistic on exact uniforms") {
  RngStream rng(3);
  std::vector<double> u;
  for (int i = 0; i < 100000; ++i) u.push_back(rng.uniform());
  const double d = st::ks_statistic(u, [](double x) { return x; });
  CHECK(d < 1.63 / std::sqrt(1e5));
}

TEST_CASE("moment_check targets") {
  RngStream rng(17);
  // variance 2 normal: second moment target 2
  std::vector<double> ou;
  for (int i = 0; i < 200000; ++i) ou.push_back(std::sqrt(2.0) * rng.normal());
  auto r = st::moment_check(ou, 2, 2.0, 3.0);
  CHECK(r.pass);

  // gamma(shape 2, rate 2) via sum of two exponentials: mean 1, variance 1/2
  std::vector<double> gam;
  for (int i = 0; i < 200000; ++i)
    gam.push_back(rng.exponential(2.0) + rng.exponential(2.0));
  CHECK(st::moment_check(gam, 1, 1.0, 3.0).pass);
  CHECK(st::moment_check(gam, 2, 0.5, 3.0, /*central=*/true).pass);

  // exponential(2): mean 1/2
  std::vector<double> ex;
  for (int i = 0; i < 200000; ++i) ex.push_back(rng.exponential(2.0));
  CHECK(st::moment_check(ex, 1, 0.5, 3.0).pass);

  // a wrong target fails
  CHECK(!st::moment_check(ex, 1, 0.6, 3.0).pass);
}

TEST_CASE("report serialization round-trips exactly") {
  auto r = st::make_report("modelC", "tv_occupation", "TV", 0.031, 0.05, 1000000, 42);
  CHECK(r.pass);
  CHECK(r.to_json() == r.to_json());  // byte-stable
  CHECK(st::ComparisonReport::csv_header() == "model,test,statistic,value,threshold,pass,n,seed");

  // the printed value parses back to the identical double
  const std::string csv = r.to_csv();
  const auto field = csv.find("TV,") + 3;
  const double parsed = std::strtod(csv.c_str() + field, nullptr);
  CHECK(parsed == 0.031);
  CHECK(csv.substr(0, field) == "modelC,tv_occupation,TV,");
}
