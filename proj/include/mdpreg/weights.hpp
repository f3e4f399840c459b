#pragma once

#include <Eigen/Dense>

#include <optional>

#include "mdpreg/alpha.hpp"
#include "mdpreg/dataset.hpp"

namespace mdpreg {

// First two moments of the posterior row-weight vector n* over the
// augmented design (real rows first, then imaginary rows).
struct WeightMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  // Set when the moments are conditional on a fixed concentration value;
  // empty for moments marginalized over an AlphaPosterior.
  std::optional<double> conditional_alpha;
};

// E(n* | data, alpha) and V(n* | data, alpha): the weight vector is
// (n + alpha + 1) * p where p is the normalized mass vector with entries
// n_c / (alpha + n) on real rows and the mode-dependent imaginary mass, so
//   mean = (n + alpha + 1) p,
//   cov  = diag(mean) - mean mean^T / (n + alpha + 1).
WeightMoments conditional_moments(const AugmentedDesign& design, double alpha);

// Moments marginalized over the concentration posterior:
//   mean = sum_a pi_a mean_a,
//   cov  = sum_a pi_a (cov_a + mean_a mean_a^T) - mean mean^T,
// evaluated in an exact low-rank form so the cost is O(grid + rows^2).
// A one-point posterior returns conditional_moments at that grid value
// (with conditional_alpha cleared).
WeightMoments marginal_moments(const AugmentedDesign& design,
                               const AlphaPosterior& posterior);

}  // namespace mdpreg
