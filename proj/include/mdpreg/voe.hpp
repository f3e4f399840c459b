#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "mdpreg/alpha.hpp"
#include "mdpreg/dataset.hpp"
#include "mdpreg/estimator.hpp"

namespace mdpreg {

// One vibration-of-effects cell: the treatment effect obtained from a
// standalone fit of one (alpha, covariate subset) combination.
struct VoECell {
  double alpha = 0.0;
  std::vector<int> subset;  // design column indices, sorted, incl. treatment
  double effect_size = 0.0;
  double gic2 = 0.0;
  double beta_T = 0.0;
  double psd_T = 0.0;
};

struct VoEOptions {
  double grid_step = 0.005;
  ImaginaryMassMode mass_mode = ImaginaryMassMode::per_row;
  double level = 0.95;
};

// For every grid value of the concentration, runs least-angle regression on
// the ridge-augmented standardized design and refits each active set that
// contains the treatment column as a standalone model. Cells are sorted by
// (gic2, alpha, subset). Returns an empty vector when the treatment never
// enters any path.
std::vector<VoECell> voe_analysis(const Dataset& data, int treatment_column,
                                  const AlphaPrior& prior,
                                  const VoEOptions& options = {});

// One posterior draw of the hidden-confounder adjustment: confounder effect
// gamma, logistic exposure-model coefficients lambda, and the resulting
// adjusted treatment effect.
struct SensitivityDraw {
  double gamma = 0.0;
  Eigen::VectorXd lambda;  // (lambda_0, lambda_T, lambda_covariates...)
  double mu1 = 0.0;        // mean confounder prevalence at max treatment
  double mu0 = 0.0;        // mean confounder prevalence at min treatment
  double beta_T_adjusted = 0.0;
  double es_adjusted = 0.0;
};

// Deterministic adjustment at user-chosen (gamma, lambda):
//   mu_t  = average over rows of logistic(lambda_0 + lambda_T t + x^T lambda_x)
//   beta' = beta_T - gamma (mu1 - mu0),  es' = beta' / psd_T.
// The treatment column must be centered (|mean| <= 1e-8 * scale).
SensitivityDraw sensitivity_draw_at(const FitResult& fit, const Dataset& data,
                                    int treatment_column, double gamma,
                                    const Eigen::VectorXd& lambda);

// n_draws independent draws with gamma ~ N(0,1) and lambda ~ N(0, I); draw d
// uses substream(seed, d).
std::vector<SensitivityDraw> sensitivity_analysis(const FitResult& fit,
                                                  const Dataset& data,
                                                  int treatment_column,
                                                  int n_draws,
                                                  std::uint64_t seed);

}  // namespace mdpreg
