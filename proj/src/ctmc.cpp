#include "renv/ctmc.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <memory>
#include <deque>
#include <stdexcept>
#include <unordered_set>

namespace renv::ctmc {

namespace {

// neighbors() may be a superset with repeats; collapse to unique targets.
std::vector<Label> unique_neighbors(const RateKernel& kernel, const Label& s) {
  std::vector<Label> raw = kernel.neighbors(s);
  std::vector<Label> out;
  out.reserve(raw.size());
  std::unordered_set<Label> seen;
  for (auto& t : raw) {
    if (t == s) continue;
    if (seen.insert(t).second) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

StateSpace::StateSpace(std::vector<Label> states) : states_(std::move(states)) {
  index_.reserve(states_.size());
  for (int i = 0; i < static_cast<int>(states_.size()); ++i) {
    if (!index_.emplace(states_[i], i).second)
      throw std::invalid_argument("StateSpace: duplicate label '" + states_[i] + "'");
  }
}

int StateSpace::ordinal(const Label& s) const {
  auto it = index_.find(s);
  return it == index_.end() ? -1 : it->second;
}

GeneratorMatrix build_generator(const StateSpace& space, const RateKernel& kernel) {
  const int n = space.size();
  std::vector<Eigen::Triplet<double>> entries;
  GeneratorMatrix out;
  for (int i = 0; i < n; ++i) {
    const Label& s = space.label(i);
    double exit = 0;
    for (const Label& t : unique_neighbors(kernel, s)) {
      const double r = kernel.rate(s, t);
      if (r < 0)
        throw std::invalid_argument("build_generator: negative rate for pair ('" + s +
                                    "','" + t + "')");
      if (r == 0) continue;
      const int j = space.ordinal(t);
      if (j < 0) {
        ++out.dropped_transitions;  // reflecting truncation
        continue;
      }
      entries.emplace_back(i, j, r);
      exit += r;
    }
    entries.emplace_back(i, i, -exit);
  }
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(entries.begin(), entries.end());
  return out;
}

namespace {

std::vector<char> reachable(const Eigen::SparseMatrix<double>& adj, int start,
                            bool transpose) {
  std::vector<char> seen(adj.rows(), 0);
  std::deque<int> queue{start};
  seen[start] = 1;
  // column-major sparse: iterate columns for forward edges of the transpose
  Eigen::SparseMatrix<double> m = transpose ? adj.transpose() : adj;
  m.makeCompressed();
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, u); it; ++it) {
      // m is column-major; column u holds edges v -> u of m^T, i.e. u -> v
      const int v = static_cast<int>(it.row());
      if (it.value() > 0 && u != v && !seen[v]) {
        seen[v] = 1;
        queue.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

StationaryResult stationary_solve(const GeneratorMatrix& gen, const StateSpace& space) {
  const int n = gen.matrix.rows();
  if (n == 0) throw std::invalid_argument("stationary_solve: empty space");

  // Irreducibility: every state must both reach and be reachable from state 0.
  // Q is row-major conceptually but stored column-major; column u of Q^T lists
  // successors of u, so pass transpose=true for forward reachability.
  const auto fwd = reachable(gen.matrix, 0, true);
  const auto bwd = reachable(gen.matrix, 0, false);
  for (int i = 0; i < n; ++i) {
    if (!fwd[i])
      throw std::runtime_error("stationary_solve: reducible chain; '" + space.label(0) +
                               "' does not reach '" + space.label(i) + "'");
    if (!bwd[i])
      throw std::runtime_error("stationary_solve: reducible chain; '" + space.label(i) +
                               "' does not reach '" + space.label(0) + "'");
  }

  // Solve Q^T pi = 0 with row 0 replaced by the normalization sum(pi) = 1.
  Eigen::SparseMatrix<double> a = gen.matrix.transpose();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(a.nonZeros() + n);
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
      if (it.row() != 0) entries.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < n; ++j) entries.emplace_back(0, j, 1.0);
  Eigen::SparseMatrix<double> sys(n, n);
  sys.setFromTriplets(entries.begin(), entries.end());
  sys.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(sys);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("stationary_solve: singular linear system");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[0] = 1.0;
  Eigen::VectorXd pi = lu.solve(rhs);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("stationary_solve: sparse solve failed");

  if (pi.minCoeff() < -1e-8)
    throw std::runtime_error("stationary_solve: solution has a negative entry");
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();

  StationaryResult out;
  out.pi = pi;
  out.residual = (gen.matrix.transpose() * pi).cwiseAbs().maxCoeff();
  return out;
}

double balance_residual(const std::function<double(const Label&)>& measure,
                        const RateKernel& kernel, const Label& s) {
  double out_flow = 0, in_flow = 0;
  const double ms = measure(s);
  for (const Label& t : unique_neighbors(kernel, s)) {
    out_flow += ms * kernel.rate(s, t);
    in_flow += measure(t) * kernel.rate(t, s);
  }
  return out_flow - in_flow;
}

Label combined_label(const Label& env, const Label& base) {
  if (env.find('|') != Label::npos)
    throw std::invalid_argument("combined_label: environment label contains '|'");
  return env + "|" + base;
}

std::pair<Label, Label> split_label(const Label& combined) {
  const auto pos = combined.find('|');
  if (pos == Label::npos)
    throw std::invalid_argument("split_label: '" + combined + "' is not a pair label");
  return {combined.substr(0, pos), combined.substr(pos + 1)};
}

RateKernel combined_jump_kernel(std::function<RateKernel(const Label&)> base_for_env,
                                std::function<RateKernel(const Label&)> env_for_base,
                                std::function<double(const Label&, const Label&)> density,
                                std::function<double(const Label&)> alpha,
                                std::function<double(const Label&)> sigma) {
  RateKernel k;
  k.rate = [=](const Label& from, const Label& to) -> double {
    if (from == to) return 0.0;
    const auto [z, x] = split_label(from);
    const auto [z2, x2] = split_label(to);
    if (z == z2 && x != x2) return alpha(z) * base_for_env(z).rate(x, x2);
    if (x == x2 && z != z2) {
      const double env_rate = env_for_base(x).rate(z, z2);
      if (env_rate == 0.0) return 0.0;
      const double m = density(z, x);
      if (!(m > 0.0))
        throw std::runtime_error("combined_jump_kernel: density <= 0 at (" + z + "," +
                                 x + ")");
      return sigma(z) * env_rate / m;
    }
    return 0.0;
  };
  k.neighbors = [=](const Label& s) {
    const auto [z, x] = split_label(s);
    std::vector<Label> out;
    for (const Label& x2 : base_for_env(z).neighbors(x))
      if (x2 != x) out.push_back(combined_label(z, x2));
    for (const Label& z2 : env_for_base(x).neighbors(z))
      if (z2 != z) out.push_back(combined_label(z2, x));
    return out;
  };
  return k;
}

Trajectory gillespie_simulate(const RateKernel& kernel, const Label& init, double t_end,
                              RngStream& rng, long max_events) {
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(init);
  traj.t_end = t_end;

  double t = 0;
  Label current = init;
  std::vector<Label> targets;
  std::vector<double> rates;
  for (long events = 0; events < max_events;) {
    targets.clear();
    rates.clear();
    double total = 0;
    for (const Label& s : unique_neighbors(kernel, current)) {
      const double r = kernel.rate(current, s);
      if (r > 0) {
        targets.push_back(s);
        rates.push_back(r);
        total += r;
      }
    }
    if (total <= 0) return traj;  // absorbing
    t += rng.exponential(total);
    if (t >= t_end) return traj;
    double u = rng.uniform() * total;
    std::size_t pick = 0;
    for (; pick + 1 < rates.size() && u > rates[pick]; ++pick) u -= rates[pick];
    current = targets[pick];
    traj.times.push_back(t);
    traj.states.push_back(current);
    ++events;
  }
  traj.truncated = true;
  traj.t_end = traj.times.back();
  return traj;
}

std::unordered_map<Label, double> occupation_measure(const Trajectory& traj,
                                                     double t_burn) {
  if (traj.times.empty()) throw std::invalid_argument("occupation_measure: empty trajectory");
  if (!(t_burn < traj.t_end))
    throw std::invalid_argument("occupation_measure: burn-in window is empty");
  std::unordered_map<Label, double> mass;
  const std::size_t n = traj.times.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double seg_start = std::max(traj.times[k], t_burn);
    const double seg_end = k + 1 < n ? std::min(traj.times[k + 1], traj.t_end) : traj.t_end;
    if (seg_end > seg_start) mass[traj.states[k]] += seg_end - seg_start;
  }
  const double total = traj.t_end - t_burn;
  for (auto& [label, w] : mass) w /= total;
  return mass;
}

}  // namespace renv::ctmc
