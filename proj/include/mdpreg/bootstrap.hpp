#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "mdpreg/alpha.hpp"
#include "mdpreg/dataset.hpp"

namespace mdpreg {

// Monte Carlo draws of the WLS functional under resampled posterior weights.
struct BootstrapSample {
  Eigen::MatrixXd betas;   // B x K, one functional draw per row
  Eigen::VectorXd alphas;  // concentration used for each draw
  std::uint64_t seed = 0;
  long rejected = 0;       // singular replicates discarded and redrawn
};

// One draw of the augmented weight vector at fixed concentration alpha:
// multinomial counts over the augmented rows rescaled so the weight total is
// n + alpha + 1. Matches conditional_moments exactly in mean for every
// alpha, and in covariance at integer alpha (see the note in bootstrap.cpp).
Eigen::VectorXd sample_weights(const AugmentedDesign& design, double alpha,
                               std::mt19937_64& rng);

// B functional draws at fixed alpha. Draw b uses substream(seed, b), so the
// result is reproducible and independent of thread count.
BootstrapSample bootstrap_functional(const AugmentedDesign& design,
                                     double alpha, long B, std::uint64_t seed,
                                     int n_threads = 1);

// B functional draws with alpha itself resampled from the grid posterior for
// every replicate.
BootstrapSample bootstrap_functional(const AugmentedDesign& design,
                                     const AlphaPosterior& posterior, long B,
                                     std::uint64_t seed, int n_threads = 1);

}  // namespace mdpreg
