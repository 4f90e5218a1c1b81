#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "renv/ctmc.hpp"

namespace renv::jackson {

using QueueState = Eigen::VectorXi;

// Open network: per-site Poisson arrivals, exponential single servers,
// sub-stochastic routing.
struct NetworkSpec {
  std::vector<std::string> sites;
  Eigen::VectorXd arrival;  // lambda_i >= 0
  Eigen::VectorXd service;  // mu_i > 0
  Eigen::MatrixXd routing;  // p_ik >= 0, row sums <= 1
};

// Environment-indexed family of networks plus the environment walk.
// tau(n, z, z') is the nominal environment jump intensity; the optional
// factored form tau = h(n) * tau_bar feeds the boundedness diagnostic.
struct EnvironmentSpec {
  std::vector<std::string> envs;
  std::vector<NetworkSpec> networks;
  std::vector<double> alpha;  // >= 0, scales task moves
  std::vector<double> sigma;  // > 0, scales environment moves
  std::function<double(const QueueState&, int, int)> tau;
  std::function<double(const QueueState&)> tau_h;  // optional
  Eigen::MatrixXd tau_bar;                         // optional, empty if absent
};

struct XiResult {
  bool finite = false;
  double value = 0;
  std::string offending;  // "(site i, env z)" when divergent
};

struct NonexplosionReport {
  double max_total_rate = 0;     // max exit rate over the sample
  double max_env_rate = 0;       // environment summand alone
  std::string argmax_state;
  bool factored_supplied = false;
  double max_factored_growth = 0;  // max of h(n) * sup_z prod (mu/rho)^n
  bool bounded_flag = false;       // growth heuristic over the sample
};

void validate_network(const NetworkSpec& spec);

// Total flow rho = lambda (I - P)^{-1}; throws when I - P is singular.
Eigen::VectorXd traffic_solve(const NetworkSpec& spec);

std::string queue_label(const QueueState& n);
QueueState parse_queue_label(const std::string& label, int sites);

// Task-move kernel on queue states (arrivals, exits, transfers).
ctmc::RateKernel jn_rates(const NetworkSpec& spec);

// Combined kernel on environment x queue states: task moves scaled by
// alpha(z), environment moves at sigma(z) tau(n,z,z') prod(rho/mu)^{-n}.
ctmc::RateKernel combined_rates(const EnvironmentSpec& env);

// Product-form invariant weight prod_i(rho_i/mu_i)^{n_i} / sigma(z).
double kappa(const EnvironmentSpec& env, int z, const QueueState& n);

// Normalizer sum_{z,n} kappa, evaluated by geometric series.
XiResult xi(const EnvironmentSpec& env);

NonexplosionReport nonexplosion_report(const EnvironmentSpec& env,
                                       const std::vector<std::pair<int, QueueState>>& sample);

// Row-sum/column-sum symmetry of tau over the given states; returns
// human-readable warnings, empty when the condition holds.
std::vector<std::string> check_env_symmetry(const EnvironmentSpec& env,
                                            const std::vector<QueueState>& states);

struct PartialBalance {
  double task_residual = 0;  // flows that move the queue, environment fixed
  double env_residual = 0;   // flows that move the environment, queue fixed
};

PartialBalance partial_balance(const EnvironmentSpec& env, int z, const QueueState& n);

}  // namespace renv::jackson
