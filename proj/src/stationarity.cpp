#include "renv/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "renv/numerics.hpp"

namespace renv::stationarity {

namespace {

int find_bin(const Eigen::VectorXd& edges, double x) {
  if (x < edges[0] || x >= edges[edges.size() - 1]) return -1;
  int lo = 0, hi = static_cast<int>(edges.size()) - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (x < edges[mid] ? hi : lo) = mid;
  }
  return lo;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void Histogram1D::add(double x, double weight) {
  total += weight;
  const int b = find_bin(edges, x);
  if (b >= 0) counts[b] += weight;
}

Eigen::VectorXd Histogram1D::normalized() const {
  if (!(total > 0)) throw std::runtime_error("histogram: no mass");
  return counts / total;
}

void Histogram2D::add(double z, double x, double weight) {
  total += weight;
  const int bz = find_bin(z_edges, z);
  const int bx = find_bin(x_edges, x);
  if (bz >= 0 && bx >= 0) counts(bz, bx) += weight;
}

Eigen::MatrixXd Histogram2D::normalized() const {
  if (!(total > 0)) throw std::runtime_error("histogram: no mass");
  return counts / total;
}

Histogram1D make_histogram(double lo, double hi, int bins) {
  if (!(lo < hi) || bins < 1) throw std::invalid_argument("make_histogram: bad bins");
  Histogram1D h;
  h.edges = Eigen::VectorXd::LinSpaced(bins + 1, lo, hi);
  h.counts = Eigen::VectorXd::Zero(bins);
  return h;
}

Histogram2D make_histogram2d(double zlo, double zhi, int zbins, double xlo, double xhi,
                             int xbins) {
  Histogram2D h;
  h.z_edges = Eigen::VectorXd::LinSpaced(zbins + 1, zlo, zhi);
  h.x_edges = Eigen::VectorXd::LinSpaced(xbins + 1, xlo, xhi);
  h.counts = Eigen::MatrixXd::Zero(zbins, xbins);
  return h;
}

double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: size mismatch");
  const double sp = p.sum(), sq = q.sum();
  if (!(sp > 0) || !(sq > 0)) throw std::invalid_argument("tv_distance: zero mass");
  return 0.5 * (p / sp - q / sq).cwiseAbs().sum();
}

double tv_distance(const Histogram1D& p, const Histogram1D& q) {
  if (p.edges.size() != q.edges.size() ||
      (p.edges - q.edges).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("tv_distance: histogram bins do not match");
  return tv_distance(p.counts, q.counts);
}

Chi2Result chi2_test(const Histogram1D& hist, const std::function<double(double)>& density,
                     int dof_correction) {
  const int bins = static_cast<int>(hist.counts.size());
  Eigen::VectorXd expected(bins);
  for (int b = 0; b < bins; ++b)
    expected[b] =
        num::integrate(density, hist.edges[b], hist.edges[b + 1], 1e-10).value;
  const double mass = expected.sum();
  if (!(mass > 0)) throw std::invalid_argument("chi2_test: density has no mass on bins");
  expected *= hist.total / mass;

  // merge sparse bins left to right
  std::vector<double> obs, exp;
  double o_acc = 0, e_acc = 0;
  int merged = 0;
  for (int b = 0; b < bins; ++b) {
    o_acc += hist.counts[b];
    e_acc += expected[b];
    if (e_acc >= 5.0) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
      o_acc = e_acc = 0;
    } else {
      ++merged;
    }
  }
  if (e_acc > 0 || o_acc > 0) {
    if (!exp.empty()) {
      obs.back() += o_acc;
      exp.back() += e_acc;
    } else if (e_acc >= 5.0) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
    }
  }
  Chi2Result r;
  r.merged_bins = merged;
  r.dof = static_cast<int>(exp.size()) - 1 - dof_correction;
  if (r.dof < 1) throw std::runtime_error("chi2_test: no degrees of freedom after merging");
  for (std::size_t i = 0; i < exp.size(); ++i) {
    const double d = obs[i] - exp[i];
    r.statistic += d * d / exp[i];
  }
  r.p_value = num::gamma_q(0.5 * r.dof, 0.5 * r.statistic);
  return r;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - i / n));
    d = std::max(d, std::abs((i + 1) / n - f));
  }
  return d;
}

std::string ComparisonReport::to_json() const {
  return std::string("{\"model\":\"") + model + "\",\"test\":\"" + test +
         "\",\"statistic\":\"" + statistic + "\",\"value\":" + fmt(value) +
         ",\"threshold\":" + fmt(threshold) + ",\"pass\":" + (pass ? "true" : "false") +
         ",\"n\":" + std::to_string(sample_size) + ",\"seed\":" + std::to_string(seed) +
         "}";
}

std::string ComparisonReport::csv_header() {
  return "model,test,statistic,value,threshold,pass,n,seed";
}

std::string ComparisonReport::to_csv() const {
  return model + "," + test + "," + statistic + "," + fmt(value) + "," + fmt(threshold) +
         "," + (pass ? "1" : "0") + "," + std::to_string(sample_size) + "," +
         std::to_string(seed);
}

ComparisonReport make_report(std::string model, std::string test, std::string statistic,
                             double value, double threshold, long sample_size,
                             unsigned long long seed) {
  ComparisonReport r;
  r.model = std::move(model);
  r.test = std::move(test);
  r.statistic = std::move(statistic);
  r.value = value;
  r.threshold = threshold;
  r.pass = value <= threshold;
  r.sample_size = sample_size;
  r.seed = seed;
  return r;
}

ComparisonReport moment_check(std::span<const double> samples, int k, double target,
                              double tol_se, bool central) {
  if (k < 1 || k > 4) throw std::invalid_argument("moment_check: k must be 1..4");
  if (samples.size() < 100) throw std::invalid_argument("moment_check: too few samples");
  double mean = 0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  const double shift = central ? mean : 0.0;

  // batch means absorb autocorrelation in path samples
  const int batches = 20;
  const std::size_t per = samples.size() / batches;
  Eigen::VectorXd batch(batches);
  for (int b = 0; b < batches; ++b) {
    double acc = 0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i)
      acc += std::pow(samples[i] - shift, k);
    batch[b] = acc / static_cast<double>(per);
  }
  const double est = batch.mean();
  const double var = (batch.array() - est).square().sum() / (batches - 1);
  const double se = std::sqrt(var / batches);

  ComparisonReport r = make_report("", "moment_k" + std::to_string(k), "max-residual",
                                   std::abs(est - target), tol_se * se,
                                   static_cast<long>(samples.size()), 0);
  return r;
}

}  // namespace renv::stationarity
