#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "renv/rng.hpp"

namespace renv::ctmc {

using Label = std::string;

// Finite ordered state space with O(1) label lookup. Labels must be unique.
class StateSpace {
 public:
  StateSpace() = default;
  explicit StateSpace(std::vector<Label> states);

  int size() const { return static_cast<int>(states_.size()); }
  const Label& label(int ordinal) const { return states_.at(ordinal); }
  int ordinal(const Label& s) const;  // -1 when absent
  bool contains(const Label& s) const { return index_.count(s) > 0; }
  const std::vector<Label>& labels() const { return states_; }

 private:
  std::vector<Label> states_;
  std::unordered_map<Label, int> index_;
};

// Jump rates as callbacks. rate(s, s') must be >= 0 and zero on the
// diagonal; neighbors(s) must cover every state connected to s by a
// positive rate in either direction (a superset is fine).
struct RateKernel {
  std::function<double(const Label&, const Label&)> rate;
  std::function<std::vector<Label>(const Label&)> neighbors;
};

struct GeneratorMatrix {
  Eigen::SparseMatrix<double> matrix;  // row sums 0, off-diagonals >= 0
  long dropped_transitions = 0;        // positive rates leaving the space
};

struct StationaryResult {
  Eigen::VectorXd pi;    // entries >= 0, sums to 1
  double residual = 0;   // max |pi^T Q|
};

// Jump-chain sample path. states[k] is held on [times[k], times[k+1]),
// the last state until t_end.
struct Trajectory {
  std::vector<double> times;
  std::vector<Label> states;
  double t_end = 0;
  bool truncated = false;  // event budget exhausted before t_end
};

GeneratorMatrix build_generator(const StateSpace& space, const RateKernel& kernel);

// Direct sparse-LU solve of pi Q = 0 with the normalization row swapped in.
// Requires an irreducible chain; otherwise throws naming a pair of states
// that do not communicate.
StationaryResult stationary_solve(const GeneratorMatrix& gen, const StateSpace& space);

// Net probability flux F_out(s) - F_in(s) for an (unnormalized) measure.
double balance_residual(const std::function<double(const Label&)>& measure,
                        const RateKernel& kernel, const Label& s);

Label combined_label(const Label& env, const Label& base);
std::pair<Label, Label> split_label(const Label& combined);

// Superposition kernel on environment x base product states:
//   (z,x) -> (z,x') at alpha(z) * base_rate,
//   (z,x) -> (z',x) at sigma(z) * env_rate / density(z,x).
RateKernel combined_jump_kernel(
    std::function<RateKernel(const Label&)> base_for_env,
    std::function<RateKernel(const Label&)> env_for_base,
    std::function<double(const Label&, const Label&)> density,
    std::function<double(const Label&)> alpha,
    std::function<double(const Label&)> sigma);

Trajectory gillespie_simulate(const RateKernel& kernel, const Label& init, double t_end,
                              RngStream& rng, long max_events = 10'000'000);

// Time-weighted state fractions over [t_burn, t_end]; sums to 1.
std::unordered_map<Label, double> occupation_measure(const Trajectory& traj,
                                                     double t_burn);

}  // namespace renv::ctmc
