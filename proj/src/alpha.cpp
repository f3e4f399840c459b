#include "mdpreg/alpha.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mdpreg/errors.hpp"

namespace mdpreg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

double AlphaPrior::log_density(double alpha) const {
  if (!(xi > 0.0)) {
    throw input_error("concentration prior bound xi must be positive");
  }
  if (!(alpha > 0.0) || alpha >= xi + 1e-12) return kNegInf;
  switch (kind) {
    case Kind::uniform:
      return -std::log(xi);
    case Kind::truncated_cauchy:
      // Density proportional to 1 / (1 + alpha)^2 on (0, xi).
      return -2.0 * std::log1p(alpha);
  }
  return kNegInf;
}

AlphaGrid AlphaGrid::standard(double xi, double step) {
  if (!(step > 0.0)) {
    throw input_error("grid step must be positive");
  }
  if (!(xi >= step)) {
    throw input_error("grid upper bound xi must be at least one step");
  }
  const auto count = static_cast<Eigen::Index>(std::floor(xi / step + 1e-9));
  AlphaGrid grid;
  grid.values.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    grid.values[i] = static_cast<double>(i + 1) * step;
  }
  return grid;
}

std::vector<double> log_stirling_first(int n) {
  if (n < 1) {
    throw input_error("log_stirling_first requires n >= 1");
  }
  // Row n = 1 of the triangle; |s(1, 1)| = 1.
  std::vector<double> row{0.0};
  row.reserve(static_cast<std::size_t>(n));
  for (int m = 1; m < n; ++m) {
    // |s(m+1, k)| = |s(m, k-1)| + m * |s(m, k)|, evaluated in log space.
    std::vector<double> next(static_cast<std::size_t>(m) + 1);
    const double log_m = std::log(static_cast<double>(m));
    next[0] = log_m + row[0];
    for (int k = 2; k <= m; ++k) {
      next[static_cast<std::size_t>(k - 1)] =
          logaddexp(row[static_cast<std::size_t>(k - 2)],
                    log_m + row[static_cast<std::size_t>(k - 1)]);
    }
    next[static_cast<std::size_t>(m)] = row[static_cast<std::size_t>(m - 1)];
    row = std::move(next);
  }
  return row;
}

double cluster_count_log_pmf(int n, int k, double alpha,
                             const std::vector<double>& log_stirling_row) {
  if (n < 1 || k < 1 || k > n) {
    throw input_error("cluster-count pmf requires 1 <= k <= n");
  }
  if (!(alpha > 0.0)) {
    throw input_error("concentration must be positive");
  }
  if (log_stirling_row.size() != static_cast<std::size_t>(n)) {
    throw input_error("Stirling row length does not match n");
  }
  return log_stirling_row[static_cast<std::size_t>(k - 1)] +
         static_cast<double>(k) * std::log(alpha) + std::lgamma(alpha) -
         std::lgamma(alpha + static_cast<double>(n));
}

double cluster_count_log_pmf(int n, int k, double alpha) {
  return cluster_count_log_pmf(n, k, alpha, log_stirling_first(n));
}

AlphaPosterior alpha_posterior(const AlphaPrior& prior, long c_n, long n,
                               double grid_step) {
  if (n < 1 || c_n < 1 || c_n > n) {
    throw input_error("alpha_posterior requires 1 <= c_n <= n");
  }

  AlphaPosterior post;
  post.grid = AlphaGrid::standard(prior.xi, grid_step);
  const Eigen::Index m = post.grid.values.size();
  post.weights.resize(m);

  // The Stirling factor of the cluster-count likelihood does not depend on
  // alpha, so the posterior kernel only needs alpha^{c_n} Gamma(alpha) /
  // Gamma(alpha + n) times the prior.
  const double nd = static_cast<double>(n);
  double max_log = kNegInf;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double a = post.grid.values[i];
    const double lk = prior.log_density(a) +
                      static_cast<double>(c_n) * std::log(a) +
                      std::lgamma(a) - std::lgamma(a + nd);
    post.weights[i] = lk;
    max_log = std::max(max_log, lk);
  }
  if (max_log == kNegInf) {
    throw numeric_error("concentration posterior vanished on the whole grid");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    post.weights[i] = std::exp(post.weights[i] - max_log);
    total += post.weights[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw numeric_error("concentration posterior failed to normalize");
  }
  post.weights /= total;
  return post;
}

}  // namespace mdpreg
