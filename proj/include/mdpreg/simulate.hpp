#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "mdpreg/dataset.hpp"

namespace mdpreg {

// Covariate-generating processes for the coverage study.
enum class CovariateDist {
  uniform01,    // U(0, 1)
  exponential1, // Ex(1)
  normal25,     // N(0, 25)
  ar1_student,  // x_i = 1 + 0.5 x_{i-1} + t_{n-1} noise, x_0 = 0
};

enum class SimModel {
  mdp_uniform,      // ridge fit, uniform concentration prior (xi = 3)
  mdp_cauchy,       // ridge fit, truncated Cauchy-type prior (xi = 3)
  hc0,              // OLS with HC0 intervals
  oracle_unbounded, // degenerate control whose interval always covers
};

// One simulation cell: y_i ~ N(1 + x_i, exp(a_h x_i + a_h x_i^2)) with the
// raw covariate in the variance; x is centered after generation.
struct SimConfig {
  CovariateDist covariate_dist = CovariateDist::uniform01;
  double a_h = 0.0;
  long n = 100;
};

struct SimCellResult {
  SimConfig config;
  SimModel model;
  long reps = 0;
  long failures = 0;  // replicates where the model failed numerically
  double coverage = 0.0;
  double mc_se = 0.0;
};

struct CoverageTable {
  std::vector<SimCellResult> cells;
};

Eigen::VectorXd draw_covariates(CovariateDist dist, long n,
                                std::mt19937_64& rng);

// Heteroscedastic standard deviation at raw covariate value x.
double heteroscedastic_sd(double a_h, double x);

// One synthetic dataset (intercept + centered covariate). The draw order is
// fixed: all n covariate values first, then the n response values.
Dataset simulate_dataset(const SimConfig& config, std::mt19937_64& rng);

// Coverage of the slope's 95% interval at true value 1, for every
// (config, model) pair. Replicate r of cell c uses substream(seed,
// c * reps + r); results are identical for any thread count. n_threads <= 0
// reads MDPREG_THREADS, falling back to the hardware count.
CoverageTable coverage_study(const std::vector<SimConfig>& configs,
                             const std::vector<SimModel>& models, long reps,
                             std::uint64_t seed, int n_threads = 0);

std::string to_string(CovariateDist dist);
std::string to_string(SimModel model);

}  // namespace mdpreg
