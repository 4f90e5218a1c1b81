#include <doctest.h>

#include <cmath>

#include "renv/jackson.hpp"

using namespace renv;
using jackson::EnvironmentSpec;
using jackson::NetworkSpec;
using jackson::QueueState;

namespace {

NetworkSpec two_site_a() {
  NetworkSpec s;
  s.sites = {"a", "b"};
  s.arrival = Eigen::Vector2d(1.0, 0.0);
  s.service = Eigen::Vector2d(4.0, 2.0);
  s.routing = Eigen::Matrix2d{{0.0, 0.5}, {0.0, 0.0}};
  return s;
}

NetworkSpec two_site_b() {
  NetworkSpec s;
  s.sites = {"a", "b"};
  s.arrival = Eigen::Vector2d(0.5, 0.5);
  s.service = Eigen::Vector2d(2.0, 4.0);
  s.routing = Eigen::Matrix2d{{0.0, 0.25}, {0.25, 0.0}};
  return s;
}

NetworkSpec single_site(double lam, double mu, double p11 = 0.0) {
  NetworkSpec s;
  s.sites = {"q"};
  s.arrival = Eigen::VectorXd::Constant(1, lam);
  s.service = Eigen::VectorXd::Constant(1, mu);
  s.routing = Eigen::MatrixXd::Constant(1, 1, p11);
  return s;
}

// two-site, two-environment fixture; tau(n,z,z') = 1/(1 + sum n)
EnvironmentSpec two_env_fixture() {
  EnvironmentSpec env;
  env.envs = {"1", "2"};
  env.networks = {two_site_a(), two_site_b()};
  env.alpha = {1.0, 2.0};
  env.sigma = {1.0, 3.0};
  env.tau = [](const QueueState& n, int z, int z2) {
    if (z == z2) return 0.0;
    return 1.0 / (1.0 + n.sum());
  };
  env.tau_h = [](const QueueState& n) { return 1.0 / (1.0 + n.sum()); };
  env.tau_bar = Eigen::Matrix2d{{0.0, 1.0}, {1.0, 0.0}};
  return env;
}

QueueState qs(int a, int b) {
  QueueState n(2);
  n << a, b;
  return n;
}

}  // namespace

TEST_CASE("traffic_solve basics") {
  // no routing: rho = lambda
  NetworkSpec s = two_site_a();
  s.routing.setZero();
  CHECK(jackson::traffic_solve(s).isApprox(s.arrival, 1e-14));

  // feed-forward pair
  auto rho = jackson::traffic_solve(two_site_a());
  CHECK(rho[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rho[1] == doctest::Approx(0.5).epsilon(1e-12));

  // self-loop geometric series 0.3 / (1 - 0.5)
  auto rho1 = jackson::traffic_solve(single_site(0.3, 1.0, 0.5));
  CHECK(rho1[0] == doctest::Approx(0.6).epsilon(1e-12));

  // rho = lambda + rho P componentwise
  auto s2 = two_site_b();
  auto r2 = jackson::traffic_solve(s2);
  Eigen::VectorXd back = s2.arrival + (r2.transpose() * s2.routing).transpose();
  CHECK((r2 - back).cwiseAbs().maxCoeff() < 1e-12);

  NetworkSpec bad = single_site(0.3, 1.0, 1.0);  // I - P singular
  CHECK_THROWS_AS(jackson::traffic_solve(bad), std::runtime_error);
}

TEST_CASE("jn_rates transition table") {
  auto k = jackson::jn_rates(two_site_a());
  // transfer (1,0) -> (0,1) at mu_1 p_12
  CHECK(k.rate("1,0", "0,1") == doctest::Approx(4.0 * 0.5));
  // empty system has no departures
  CHECK(k.rate("0,0", "0,-1") == 0.0);
  for (const auto& nb : k.neighbors("0,0")) CHECK(k.rate("0,0", nb) >= 0.0);
  // arrivals are state-independent
  CHECK(k.rate("0,0", "1,0") == doctest::Approx(1.0));
  CHECK(k.rate("5,3", "6,3") == doctest::Approx(1.0));
  // exit from site a at mu_1 p_1*
  CHECK(k.rate("2,1", "1,1") == doctest::Approx(4.0 * 0.5));
}

TEST_CASE("combined_rates environment moves carry the load factor") {
  EnvironmentSpec env;
  env.envs = {"1", "2"};
  env.networks = {single_site(0.5, 1.0), single_site(0.25, 1.0)};
  env.alpha = {1.0, 1.0};
  env.sigma = {1.0, 1.0};
  env.tau = [](const QueueState&, int z, int z2) { return z == z2 ? 0.0 : 1.0; };
  auto k = jackson::combined_rates(env);
  // rho/mu = 0.5 under env 1, n = 2: rate = 0.5^{-2} = 4
  CHECK(k.rate("1|2", "2|2") == doctest::Approx(4.0).epsilon(1e-12));
  // n = 0: bare sigma tau
  CHECK(k.rate("1|0", "2|0") == doctest::Approx(1.0));
  // task moves under env scale alpha
  CHECK(k.rate("1|0", "1|1") == doctest::Approx(0.5));

  // alpha == 0 freezes the queue entirely
  env.alpha = {0.0, 0.0};
  auto frozen = jackson::combined_rates(env);
  CHECK(frozen.rate("1|0", "1|1") == 0.0);
  CHECK(frozen.rate("1|2", "2|2") == doctest::Approx(4.0));
}

TEST_CASE("kappa product form and invariances") {
  auto env = two_env_fixture();
  // empty queue: 1/sigma(z)
  CHECK(jackson::kappa(env, 0, qs(0, 0)) == doctest::Approx(1.0));
  CHECK(jackson::kappa(env, 1, qs(0, 0)) == doctest::Approx(1.0 / 3.0));

  // single site rho/mu = 0.5, sigma = 2, n = 3 -> 0.0625
  EnvironmentSpec one;
  one.envs = {"z"};
  one.networks = {single_site(0.5, 1.0)};
  one.alpha = {1.0};
  one.sigma = {2.0};
  one.tau = [](const QueueState&, int, int) { return 0.0; };
  QueueState n3(1);
  n3 << 3;
  CHECK(jackson::kappa(one, 0, n3) == doctest::Approx(0.0625).epsilon(1e-12));

  // two sites, loads (0.5, 0.25), n = (1,2) -> 0.5 * 0.0625 = 0.03125
  NetworkSpec pair;
  pair.sites = {"a", "b"};
  pair.arrival = Eigen::Vector2d(0.5, 0.25);
  pair.service = Eigen::Vector2d(1.0, 1.0);
  pair.routing = Eigen::Matrix2d::Zero();
  EnvironmentSpec envp = one;
  envp.networks = {pair};
  envp.sigma = {1.0};
  CHECK(jackson::kappa(envp, 0, qs(1, 2)) == doctest::Approx(0.03125).epsilon(1e-12));

  // kappa ignores alpha and tau rescaling
  auto env2 = two_env_fixture();
  env2.alpha = {5.0, 0.25};
  env2.tau = [](const QueueState& n, int z, int z2) {
    return z == z2 ? 0.0 : 7.0 / (1.0 + n.sum());
  };
  for (int z = 0; z < 2; ++z)
    for (int a = 0; a <= 3; ++a)
      for (int b = 0; b <= 3; ++b)
        CHECK(jackson::kappa(env, z, qs(a, b)) ==
              doctest::Approx(jackson::kappa(env2, z, qs(a, b))).epsilon(1e-14));
}

TEST_CASE("xi by geometric series") {
  EnvironmentSpec one;
  one.envs = {"z"};
  one.networks = {single_site(0.5, 1.0)};
  one.alpha = {1.0};
  one.sigma = {1.0};
  one.tau = [](const QueueState&, int, int) { return 0.0; };
  auto r = jackson::xi(one);
  CHECK(r.finite);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-14));

  EnvironmentSpec two = one;
  two.envs = {"z1", "z2"};
  two.networks = {single_site(0.5, 1.0), single_site(0.5, 1.0)};
  two.alpha = {1.0, 1.0};
  two.sigma = {1.0, 1.0};
  auto r2 = jackson::xi(two);
  CHECK(r2.finite);
  CHECK(r2.value == doctest::Approx(4.0).epsilon(1e-14));

  EnvironmentSpec critical = one;
  critical.networks = {single_site(1.0, 1.0)};
  auto r3 = jackson::xi(critical);
  CHECK(!r3.finite);
  CHECK(r3.offending.find("site q") != std::string::npos);
}

TEST_CASE("per-state balance vanishes on the two-environment fixture") {
  auto env = two_env_fixture();
  auto kernel = jackson::combined_rates(env);
  auto weight = [&](const ctmc::Label& s) {
    const auto [z, nl] = ctmc::split_label(s);
    return jackson::kappa(env, z == "1" ? 0 : 1, jackson::parse_queue_label(nl, 2));
  };
  double worst = 0;
  for (int z = 0; z < 2; ++z)
    for (int a = 0; a <= 6; ++a)
      for (int b = 0; b <= 6; ++b) {
        const auto s = ctmc::combined_label(env.envs[z], jackson::queue_label(qs(a, b)));
        worst = std::max(worst, std::abs(ctmc::balance_residual(weight, kernel, s)));
      }
  CHECK(worst < 1e-10);
}

TEST_CASE("partial balances vanish separately") {
  auto env = two_env_fixture();
  double worst_task = 0, worst_env = 0;
  for (int z = 0; z < 2; ++z)
    for (int a = 0; a <= 5; ++a)
      for (int b = 0; b <= 5; ++b) {
        auto pb = jackson::partial_balance(env, z, qs(a, b));
        worst_task = std::max(worst_task, std::abs(pb.task_residual));
        worst_env = std::max(worst_env, std::abs(pb.env_residual));
      }
  CHECK(worst_task < 1e-10);
  CHECK(worst_env < 1e-10);
}

TEST_CASE("combined_jump_kernel reproduces combined_rates on the fixture") {
  auto env = two_env_fixture();
  auto direct = jackson::combined_rates(env);

  auto base = [&](const ctmc::Label& z) {
    const int zi = z == "1" ? 0 : 1;
    auto inner = jackson::jn_rates(env.networks[zi]);
    const double a = env.alpha[zi];
    ctmc::RateKernel k;
    k.rate = [inner, a](const ctmc::Label& s, const ctmc::Label& t) {
      return a * inner.rate(s, t);
    };
    k.neighbors = inner.neighbors;
    return k;
  };
  auto envk = [&](const ctmc::Label& x) {
    ctmc::RateKernel k;
    k.rate = [&env, x](const ctmc::Label& z, const ctmc::Label& z2) {
      if (z == z2) return 0.0;
      return env.tau(jackson::parse_queue_label(x, 2), z == "1" ? 0 : 1, z2 == "1" ? 0 : 1);
    };
    k.neighbors = [](const ctmc::Label& z) {
      return std::vector<ctmc::Label>{z == "1" ? "2" : "1"};
    };
    return k;
  };
  auto density = [&](const ctmc::Label& z, const ctmc::Label& x) {
    const int zi = z == "1" ? 0 : 1;
    // m = sigma * kappa = product of load powers
    return env.sigma[zi] * jackson::kappa(env, zi, jackson::parse_queue_label(x, 2));
  };
  auto generic = ctmc::combined_jump_kernel(
      base, envk, density, [](const ctmc::Label&) { return 1.0; },
      [&](const ctmc::Label& z) { return env.sigma[z == "1" ? 0 : 1]; });

  for (int z = 0; z < 2; ++z)
    for (int a = 0; a <= 3; ++a)
      for (int b = 0; b <= 3; ++b) {
        const auto s = ctmc::combined_label(env.envs[z], jackson::queue_label(qs(a, b)));
        for (const auto& t : direct.neighbors(s))
          CHECK(direct.rate(s, t) == doctest::Approx(generic.rate(s, t)).epsilon(1e-12));
      }
}

TEST_CASE("single environment reduces to the product form") {
  EnvironmentSpec env;
  env.envs = {"only"};
  env.networks = {two_site_a()};
  env.alpha = {1.0};
  env.sigma = {1.0};
  env.tau = [](const QueueState&, int, int) { return 0.0; };

  // kappa equals the bare product of load powers
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4; ++b)
      CHECK(jackson::kappa(env, 0, qs(a, b)) ==
            doctest::Approx(std::pow(0.25, a) * std::pow(0.25, b)).epsilon(1e-12));

  // interior of a truncated solve matches within 1e-6
  const int cap = 12;
  std::vector<ctmc::Label> labels;
  for (int a = 0; a <= cap; ++a)
    for (int b = 0; b <= cap; ++b)
      labels.push_back(ctmc::combined_label("only", jackson::queue_label(qs(a, b))));
  ctmc::StateSpace space(labels);
  auto kernel = jackson::combined_rates(env);
  auto sol = ctmc::stationary_solve(ctmc::build_generator(space, kernel), space);

  double kappa_total = 0;
  for (int a = 0; a <= cap; ++a)
    for (int b = 0; b <= cap; ++b) kappa_total += jackson::kappa(env, 0, qs(a, b));
  for (int a = 0; a <= 10; ++a)
    for (int b = 0; b <= 10; ++b) {
      const int idx = space.ordinal(
          ctmc::combined_label("only", jackson::queue_label(qs(a, b))));
      CHECK(std::abs(sol.pi[idx] - jackson::kappa(env, 0, qs(a, b)) / kappa_total) < 1e-6);
    }
}

TEST_CASE("frozen environment slice weights") {
  // alpha == 0: the n=0 slice has stationary weights proportional to 1/sigma
  auto env = two_env_fixture();
  env.alpha = {0.0, 0.0};
  auto kernel = jackson::combined_rates(env);
  ctmc::StateSpace slice({"1|0,0", "2|0,0"});
  auto sol = ctmc::stationary_solve(ctmc::build_generator(slice, kernel), slice);
  Eigen::Vector2d expect(1.0 / env.sigma[0], 1.0 / env.sigma[1]);
  expect /= expect.sum();
  CHECK((sol.pi - expect).cwiseAbs().sum() < 1e-10);

  // at other n the closed slice follows kappa(., n) itself
  const QueueState n = qs(2, 1);
  ctmc::StateSpace slice2({ctmc::combined_label("1", jackson::queue_label(n)),
                           ctmc::combined_label("2", jackson::queue_label(n))});
  auto sol2 = ctmc::stationary_solve(ctmc::build_generator(slice2, kernel), slice2);
  Eigen::Vector2d expect2(jackson::kappa(env, 0, n), jackson::kappa(env, 1, n));
  expect2 /= expect2.sum();
  CHECK((sol2.pi - expect2).cwiseAbs().sum() < 1e-10);
}

TEST_CASE("environment symmetry check flags asymmetric tau") {
  auto env = two_env_fixture();
  std::vector<QueueState> states{qs(0, 0), qs(1, 2), qs(3, 3)};
  CHECK(jackson::check_env_symmetry(env, states).empty());

  env.tau = [](const QueueState&, int z, int z2) {
    if (z == z2) return 0.0;
    return z == 0 ? 1.0 : 2.0;  // breaks row/column equality
  };
  CHECK(!jackson::check_env_symmetry(env, states).empty());
}

TEST_CASE("nonexplosion diagnostic") {
  // factored tau with h = S(n)^{-1} keeps the environment rate flat
  EnvironmentSpec env;
  env.envs = {"1", "2"};
  env.networks = {single_site(0.5, 1.0), single_site(0.25, 1.0)};
  env.alpha = {1.0, 1.0};
  env.sigma = {1.0, 1.0};
  env.tau_bar = Eigen::Matrix2d{{0.0, 1.0}, {1.0, 0.0}};
  env.tau_h = [](const QueueState& n) { return std::pow(0.25, n.sum()); };  // S(n)^{-1}
  env.tau = [&](const QueueState& n, int z, int z2) {
    return z == z2 ? 0.0 : std::pow(0.25, n.sum());
  };
  std::vector<std::pair<int, QueueState>> sample;
  for (int n = 0; n <= 20; ++n) {
    QueueState q(1);
    q << n;
    sample.emplace_back(0, q);
  }
  auto rep = jackson::nonexplosion_report(env, sample);
  CHECK(rep.factored_supplied);
  CHECK(rep.bounded_flag);

  // h == 1: the rate grows like 2^n and the flag trips
  env.tau_h = [](const QueueState&) { return 1.0; };
  env.tau = [](const QueueState&, int z, int z2) { return z == z2 ? 0.0 : 1.0; };
  auto rep2 = jackson::nonexplosion_report(env, sample);
  CHECK(!rep2.bounded_flag);
  CHECK(rep2.max_env_rate == doctest::Approx(std::pow(2.0, 20)).epsilon(1e-9));

  // single environment: nothing to jump to, trivially bounded
  EnvironmentSpec solo;
  solo.envs = {"1"};
  solo.networks = {single_site(0.5, 1.0)};
  solo.alpha = {1.0};
  solo.sigma = {1.0};
  solo.tau = [](const QueueState&, int, int) { return 0.0; };
  std::vector<std::pair<int, QueueState>> sample1;
  for (int n = 0; n <= 10; ++n) {
    QueueState q(1);
    q << n;
    sample1.emplace_back(0, q);
  }
  auto rep3 = jackson::nonexplosion_report(solo, sample1);
  CHECK(rep3.bounded_flag);
  CHECK(rep3.max_env_rate == 0.0);
}

TEST_CASE("gillespie occupation tracks the product-form weights") {
  EnvironmentSpec env;
  env.envs = {"1", "2"};
  env.networks = {single_site(0.25, 1.0), single_site(0.5, 1.0)};
  env.alpha = {1.0, 1.0};
  env.sigma = {1.0, 1.0};
  env.tau = [](const QueueState&, int z, int z2) { return z == z2 ? 0.0 : 1.0; };
  auto kernel = jackson::combined_rates(env);
  RngStream rng(2024);
  auto traj = ctmc::gillespie_simulate(kernel, "1|0", 2.5e5, rng, 2'000'000);
  auto occ = ctmc::occupation_measure(traj, 100.0);

  // compare on visited states, both sides renormalized
  double emp_total = 0, kap_total = 0;
  for (const auto& [s, w] : occ) {
    emp_total += w;
    const auto [z, nl] = ctmc::split_label(s);
    kap_total += jackson::kappa(env, z == "1" ? 0 : 1, jackson::parse_queue_label(nl, 1));
  }
  double tv = 0;
  for (const auto& [s, w] : occ) {
    const auto [z, nl] = ctmc::split_label(s);
    const double k =
        jackson::kappa(env, z == "1" ? 0 : 1, jackson::parse_queue_label(nl, 1));
    tv += std::abs(w / emp_total - k / kap_total);
  }
  CHECK(tv / 2.0 < 0.05);
}
