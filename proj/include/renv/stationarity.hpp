#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace renv::stationarity {

struct Histogram1D {
  Eigen::VectorXd edges;   // strictly increasing, size bins + 1
  Eigen::VectorXd counts;  // size bins
  double total = 0;        // includes out-of-range mass

  void add(double x, double weight = 1.0);
  Eigen::VectorXd normalized() const;  // bin masses, sums to <= 1
};

struct Histogram2D {
  Eigen::VectorXd z_edges, x_edges;
  Eigen::MatrixXd counts;  // (z bins) x (x bins)
  double total = 0;

  void add(double z, double x, double weight = 1.0);
  Eigen::MatrixXd normalized() const;
};

Histogram1D make_histogram(double lo, double hi, int bins);
Histogram2D make_histogram2d(double zlo, double zhi, int zbins, double xlo, double xhi,
                             int xbins);

// Total variation (1/2) sum |p - q| after normalizing both sides.
double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double tv_distance(const Histogram1D& p, const Histogram1D& q);  // edges must match

struct Chi2Result {
  double statistic = 0;
  double p_value = 0;
  int dof = 0;
  int merged_bins = 0;
};

// Pearson test against quadrature-integrated expected bin masses; bins
// with expected count below 5 are merged with their neighbor.
Chi2Result chi2_test(const Histogram1D& hist, const std::function<double(double)>& density,
                     int dof_correction = 0);

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

struct ComparisonReport {
  std::string model;
  std::string test;
  std::string statistic;  // TV | chi2 | KS | L1 | max-residual
  double value = 0;
  double threshold = 0;
  bool pass = false;
  long sample_size = 0;
  unsigned long long seed = 0;

  std::string to_json() const;  // single JSON line
  static std::string csv_header();
  std::string to_csv() const;
};

ComparisonReport make_report(std::string model, std::string test, std::string statistic,
                             double value, double threshold, long sample_size,
                             unsigned long long seed);

// Empirical k-th moment (raw, or central when requested) against a target,
// within tol_se batch-means standard errors.
ComparisonReport moment_check(std::span<const double> samples, int k, double target,
                              double tol_se, bool central = false);

}  // namespace renv::stationarity
