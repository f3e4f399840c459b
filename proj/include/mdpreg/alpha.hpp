#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mdpreg {

// Prior for the Dirichlet-process concentration parameter, supported on
// (0, xi).
struct AlphaPrior {
  enum class Kind { uniform, truncated_cauchy };

  Kind kind = Kind::uniform;
  double xi = 3.0;

  // Log prior density (up to normalization), -inf outside (0, xi).
  double log_density(double alpha) const;

  static AlphaPrior uniform(double xi = 3.0) { return {Kind::uniform, xi}; }
  static AlphaPrior truncated_cauchy(double xi = 3.0) {
    return {Kind::truncated_cauchy, xi};
  }
};

// Evenly spaced evaluation grid for the concentration parameter.
struct AlphaGrid {
  Eigen::VectorXd values;

  // Grid {step, 2*step, ..., N*step} with N = floor(xi / step), i.e. spacing
  // equal to the minimum and maximum xi.
  static AlphaGrid standard(double xi, double step = 0.005);
};

// Discrete posterior over the grid.
struct AlphaPosterior {
  AlphaGrid grid;
  Eigen::VectorXd weights;  // nonnegative, sums to 1

  double mean() const { return grid.values.dot(weights); }
};

// Log of the signless Stirling numbers of the first kind |s(n, k)| for
// k = 1..n, computed with the stable log-space triangle recurrence
// |s(n+1, k)| = |s(n, k-1)| + n * |s(n, k)|. Entry [k-1] holds log|s(n, k)|.
std::vector<double> log_stirling_first(int n);

// log P(C_n = k | alpha) for the number of distinct clusters among n draws
// from a Dirichlet process with concentration alpha.
double cluster_count_log_pmf(int n, int k, double alpha);

// Same, reusing a precomputed row log_stirling_first(n).
double cluster_count_log_pmf(int n, int k, double alpha,
                             const std::vector<double>& log_stirling_row);

// Grid posterior of the concentration given the observed number of distinct
// clusters c_n among n rows. Normalized in log space with max subtraction.
AlphaPosterior alpha_posterior(const AlphaPrior& prior, long c_n, long n,
                               double grid_step = 0.005);

}  // namespace mdpreg
