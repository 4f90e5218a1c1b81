#include "renv/jackson.hpp"

#include <cmath>
#include <memory>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace renv::jackson {

namespace {

// Routing connectivity including the exterior node: every site must be
// reachable from outside (arrivals or routed inflow) and must drain to
// the outside again.
void check_routing_connectivity(const NetworkSpec& s) {
  const int n = static_cast<int>(s.sites.size());
  std::vector<std::vector<int>> fwd(n + 1), bwd(n + 1);  // node n = exterior
  auto add_edge = [&](int a, int b) {
    fwd[a].push_back(b);
    bwd[b].push_back(a);
  };
  for (int i = 0; i < n; ++i) {
    if (s.arrival[i] > 0) add_edge(n, i);
    const double exit = 1.0 - s.routing.row(i).sum();
    if (exit > 1e-12) add_edge(i, n);
    for (int k = 0; k < n; ++k)
      if (s.routing(i, k) > 0 && i != k) add_edge(i, k);
  }
  auto bfs = [&](const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(n + 1, 0);
    std::deque<int> q{n};
    seen[n] = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          q.push_back(v);
        }
    }
    return seen;
  };
  const auto from_outside = bfs(fwd);
  const auto to_outside = bfs(bwd);
  for (int i = 0; i < n; ++i) {
    if (!from_outside[i])
      throw std::invalid_argument("network: site '" + s.sites[i] +
                                  "' receives no flow (routing not irreducible)");
    if (!to_outside[i])
      throw std::invalid_argument("network: site '" + s.sites[i] +
                                  "' cannot drain to the exterior");
  }
}

struct EnvDerived {
  std::vector<Eigen::VectorXd> rho;    // per environment
  std::vector<Eigen::VectorXd> loads;  // rho_i / mu_i
};

EnvDerived derive(const EnvironmentSpec& env) {
  EnvDerived d;
  for (const auto& net : env.networks) {
    d.rho.push_back(traffic_solve(net));
    d.loads.push_back(d.rho.back().cwiseQuotient(net.service));
  }
  return d;
}

void validate_environment(const EnvironmentSpec& env) {
  const auto nz = env.envs.size();
  if (env.networks.size() != nz || env.alpha.size() != nz || env.sigma.size() != nz)
    throw std::invalid_argument("environment: per-state vectors must match env count");
  if (!env.tau) throw std::invalid_argument("environment: tau callback required");
  const auto sites = env.networks.front().sites.size();
  for (const auto& net : env.networks) {
    if (net.sites.size() != sites)
      throw std::invalid_argument("environment: networks must share the site set");
    validate_network(net);
  }
  for (std::size_t z = 0; z < nz; ++z) {
    if (env.alpha[z] < 0) throw std::invalid_argument("environment: alpha must be >= 0");
    if (!(env.sigma[z] > 0)) throw std::invalid_argument("environment: sigma must be > 0");
  }
}

// prod_i load_i^{n_i}; throws when a zero-flow site is occupied.
double load_power(const Eigen::VectorXd& loads, const QueueState& n,
                  const std::string& env_label) {
  double p = 1.0;
  for (int i = 0; i < n.size(); ++i) {
    if (n[i] == 0) continue;
    if (!(loads[i] > 0))
      throw std::runtime_error("environment '" + env_label + "': site " +
                               std::to_string(i) + " has zero flow but is occupied");
    p *= std::pow(loads[i], n[i]);
  }
  return p;
}

}  // namespace

void validate_network(const NetworkSpec& spec) {
  const int n = static_cast<int>(spec.sites.size());
  if (n == 0) throw std::invalid_argument("network: empty site list");
  if (spec.arrival.size() != n || spec.service.size() != n ||
      spec.routing.rows() != n || spec.routing.cols() != n)
    throw std::invalid_argument("network: dimension mismatch");
  for (int i = 0; i < n; ++i) {
    if (spec.arrival[i] < 0) throw std::invalid_argument("network: arrival rate < 0");
    if (!(spec.service[i] > 0)) throw std::invalid_argument("network: service rate must be > 0");
    double row = 0;
    for (int k = 0; k < n; ++k) {
      if (spec.routing(i, k) < 0) throw std::invalid_argument("network: routing entry < 0");
      row += spec.routing(i, k);
    }
    if (row > 1.0 + 1e-12)
      throw std::invalid_argument("network: routing row sum exceeds 1 at site '" +
                                  spec.sites[i] + "'");
  }
  check_routing_connectivity(spec);
}

Eigen::VectorXd traffic_solve(const NetworkSpec& spec) {
  const int n = static_cast<int>(spec.sites.size());
  const Eigen::MatrixXd a =
      Eigen::MatrixXd::Identity(n, n) - spec.routing;  // rho (I - P) = lambda
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a.transpose());
  if (!lu.isInvertible())
    throw std::runtime_error(
        "traffic_solve: I - P is singular; the traffic equations need it invertible");
  Eigen::VectorXd rho = lu.solve(spec.arrival);
  const double check = (rho.transpose() * spec.routing + spec.arrival.transpose() -
                        rho.transpose())
                           .cwiseAbs()
                           .maxCoeff();
  if (check > 1e-9) throw std::runtime_error("traffic_solve: residual too large");
  return rho;
}

std::string queue_label(const QueueState& n) {
  std::ostringstream os;
  for (int i = 0; i < n.size(); ++i) {
    if (i) os << ',';
    os << n[i];
  }
  return os.str();
}

QueueState parse_queue_label(const std::string& label, int sites) {
  QueueState n(sites);
  std::istringstream is(label);
  std::string tok;
  int i = 0;
  while (std::getline(is, tok, ',')) {
    if (i >= sites) throw std::invalid_argument("queue label has too many entries");
    n[i++] = std::stoi(tok);
  }
  if (i != sites) throw std::invalid_argument("queue label has too few entries");
  return n;
}

ctmc::RateKernel jn_rates(const NetworkSpec& spec) {
  validate_network(spec);
  const int sites = static_cast<int>(spec.sites.size());
  ctmc::RateKernel k;
  k.rate = [spec, sites](const ctmc::Label& from, const ctmc::Label& to) -> double {
    const QueueState a = parse_queue_label(from, sites);
    const QueueState b = parse_queue_label(to, sites);
    int up = -1, down = -1, diffs = 0;
    for (int i = 0; i < sites; ++i) {
      const int d = b[i] - a[i];
      if (d == 0) continue;
      if (d == 1 && up < 0)
        up = i;
      else if (d == -1 && down < 0)
        down = i;
      else
        return 0.0;
      ++diffs;
    }
    if (diffs == 0) return 0.0;
    if (diffs == 1 && up >= 0) return spec.arrival[up];  // arrival
    if (diffs == 1 && down >= 0) {                       // exit
      if (a[down] < 1) return 0.0;
      const double exit_prob = 1.0 - spec.routing.row(down).sum();
      return spec.service[down] * std::max(exit_prob, 0.0);
    }
    if (a[down] < 1) return 0.0;  // transfer down -> up
    return spec.service[down] * spec.routing(down, up);
  };
  k.neighbors = [spec, sites](const ctmc::Label& s) {
    const QueueState n = parse_queue_label(s, sites);
    std::vector<ctmc::Label> out;
    QueueState m = n;
    for (int i = 0; i < sites; ++i) {
      m[i] = n[i] + 1;
      out.push_back(queue_label(m));
      if (n[i] >= 1) {
        m[i] = n[i] - 1;
        out.push_back(queue_label(m));
      }
      m[i] = n[i];
    }
    // n -+ e^{i->j} covers both transfer targets and transfer sources
    for (int i = 0; i < sites; ++i) {
      if (n[i] < 1) continue;
      for (int j = 0; j < sites; ++j) {
        if (j == i) continue;
        if (spec.routing(i, j) > 0 || spec.routing(j, i) > 0) {
          m = n;
          m[i] -= 1;
          m[j] += 1;
          out.push_back(queue_label(m));
        }
      }
    }
    return out;
  };
  return k;
}

ctmc::RateKernel combined_rates(const EnvironmentSpec& env) {
  validate_environment(env);
  auto derived = std::make_shared<const EnvDerived>(derive(env));
  auto spec = std::make_shared<const EnvironmentSpec>(env);
  const int sites = static_cast<int>(env.networks.front().sites.size());
  const int nz = static_cast<int>(env.envs.size());

  auto base = std::make_shared<std::vector<ctmc::RateKernel>>();
  for (const auto& net : env.networks) base->push_back(jn_rates(net));

  auto env_ordinal = [spec, nz](const ctmc::Label& z) {
    for (int i = 0; i < nz; ++i)
      if (spec->envs[i] == z) return i;
    throw std::invalid_argument("unknown environment label '" + z + "'");
  };

  ctmc::RateKernel k;
  k.rate = [spec, derived, base, sites, env_ordinal](const ctmc::Label& from,
                                                     const ctmc::Label& to) -> double {
    const auto [zf, nf] = ctmc::split_label(from);
    const auto [zt, nt] = ctmc::split_label(to);
    const int z = env_ordinal(zf);
    if (zf == zt) {
      if (nf == nt) return 0.0;
      return spec->alpha[z] * (*base)[z].rate(nf, nt);
    }
    if (nf != nt) return 0.0;
    const int z2 = env_ordinal(zt);
    const QueueState n = parse_queue_label(nf, sites);
    const double t = spec->tau(n, z, z2);
    if (t == 0.0) return 0.0;
    return spec->sigma[z] * t / load_power(derived->loads[z], n, spec->envs[z]);
  };
  k.neighbors = [spec, base, nz, env_ordinal](const ctmc::Label& s) {
    const auto [zf, nf] = ctmc::split_label(s);
    const int z = env_ordinal(zf);
    std::vector<ctmc::Label> out;
    for (const auto& n2 : (*base)[z].neighbors(nf))
      out.push_back(ctmc::combined_label(zf, n2));
    for (int z2 = 0; z2 < nz; ++z2)
      if (z2 != z) out.push_back(ctmc::combined_label(spec->envs[z2], nf));
    return out;
  };
  return k;
}

double kappa(const EnvironmentSpec& env, int z, const QueueState& n) {
  const Eigen::VectorXd rho = traffic_solve(env.networks.at(z));
  const Eigen::VectorXd loads = rho.cwiseQuotient(env.networks[z].service);
  return load_power(loads, n, env.envs.at(z)) / env.sigma.at(z);
}

XiResult xi(const EnvironmentSpec& env) {
  XiResult out;
  double total = 0;
  for (std::size_t z = 0; z < env.envs.size(); ++z) {
    const Eigen::VectorXd rho = traffic_solve(env.networks[z]);
    double prod = 1.0;
    for (int i = 0; i < rho.size(); ++i) {
      const double load = rho[i] / env.networks[z].service[i];
      if (load >= 1.0) {
        out.finite = false;
        out.offending = "(site " + env.networks[z].sites[i] + ", env " + env.envs[z] + ")";
        return out;
      }
      prod *= 1.0 / (1.0 - load);  // geometric series in n_i
    }
    total += prod / env.sigma[z];
  }
  out.finite = true;
  out.value = total;
  return out;
}

NonexplosionReport nonexplosion_report(
    const EnvironmentSpec& env, const std::vector<std::pair<int, QueueState>>& sample) {
  validate_environment(env);
  const auto derived = derive(env);
  NonexplosionReport rep;
  rep.factored_supplied = env.tau_h && env.tau_bar.size() > 0;
  double first_env_rate = -1, first_growth = -1;
  for (const auto& [z, n] : sample) {
    double env_rate = 0;
    for (int z2 = 0; z2 < static_cast<int>(env.envs.size()); ++z2) {
      if (z2 == z) continue;
      env_rate += env.sigma[z] * env.tau(n, z, z2) /
                  load_power(derived.loads[z], n, env.envs[z]);
    }
    double task_rate = 0;
    const auto& net = env.networks[z];
    for (int i = 0; i < n.size(); ++i)
      task_rate += net.arrival[i] + (n[i] >= 1 ? net.service[i] : 0.0);
    task_rate *= env.alpha[z];

    if (first_env_rate < 0) first_env_rate = env_rate;
    rep.max_env_rate = std::max(rep.max_env_rate, env_rate);
    if (env_rate + task_rate > rep.max_total_rate) {
      rep.max_total_rate = env_rate + task_rate;
      rep.argmax_state = env.envs[z] + "|" + queue_label(n);
    }
    if (rep.factored_supplied) {
      double sup_inv = 0;  // sup_z prod (mu/rho)^{n}
      for (std::size_t zz = 0; zz < env.envs.size(); ++zz)
        sup_inv = std::max(sup_inv,
                           1.0 / load_power(derived.loads[zz], n, env.envs[zz]));
      const double g = env.tau_h(n) * sup_inv;
      if (first_growth < 0) first_growth = g;
      rep.max_factored_growth = std::max(rep.max_factored_growth, g);
    }
  }
  // Growth heuristic on the sample: bounded unless the tracked quantity
  // grows by more than a decade over its first value.
  if (rep.factored_supplied)
    rep.bounded_flag = rep.max_factored_growth <= 10.0 * (first_growth + 1.0);
  else
    rep.bounded_flag = rep.max_env_rate <= 10.0 * (first_env_rate + 1.0);
  return rep;
}

std::vector<std::string> check_env_symmetry(const EnvironmentSpec& env,
                                            const std::vector<QueueState>& states) {
  std::vector<std::string> warnings;
  const int nz = static_cast<int>(env.envs.size());
  for (const auto& n : states) {
    for (int z = 0; z < nz; ++z) {
      if (env.tau(n, z, z) != 0.0)
        warnings.push_back("tau(" + queue_label(n) + ") has a nonzero diagonal at env " +
                           env.envs[z]);
      double row = 0, col = 0;
      for (int z2 = 0; z2 < nz; ++z2) {
        row += env.tau(n, z, z2);
        col += env.tau(n, z2, z);
      }
      if (std::abs(row - col) > 1e-10 * (1.0 + row + col))
        warnings.push_back("tau(" + queue_label(n) + ") row/column sums differ at env " +
                           env.envs[z]);
    }
  }
  return warnings;
}

PartialBalance partial_balance(const EnvironmentSpec& env, int z, const QueueState& n) {
  const auto derived = derive(env);
  const auto kernel = jn_rates(env.networks.at(z));
  const std::string nl = queue_label(n);
  auto weight = [&](int zz, const QueueState& q) { return kappa(env, zz, q); };

  PartialBalance pb;
  const int sites = static_cast<int>(n.size());
  for (const auto& n2l : kernel.neighbors(nl)) {
    const QueueState n2 = parse_queue_label(n2l, sites);
    pb.task_residual += weight(z, n) * env.alpha[z] * kernel.rate(nl, n2l);
    pb.task_residual -= weight(z, n2) * env.alpha[z] * kernel.rate(n2l, nl);
  }
  for (int z2 = 0; z2 < static_cast<int>(env.envs.size()); ++z2) {
    if (z2 == z) continue;
    pb.env_residual += weight(z, n) * env.sigma[z] * env.tau(n, z, z2) /
                       load_power(derived.loads[z], n, env.envs[z]);
    pb.env_residual -= weight(z2, n) * env.sigma[z2] * env.tau(n, z2, z) /
                       load_power(derived.loads[z2], n, env.envs[z2]);
  }
  return pb;
}

}  // namespace renv::jackson
