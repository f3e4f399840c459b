#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "mdpreg/alpha.hpp"
#include "mdpreg/dataset.hpp"
#include "mdpreg/weights.hpp"

namespace mdpreg {

// Concentration information carried by a fit: either a fixed value or a grid
// posterior. effective_alpha() is the fixed value or the posterior mean; it
// feeds the information-criterion denominator.
struct AlphaSummary {
  std::optional<double> fixed_alpha;
  std::optional<AlphaPosterior> posterior;

  double effective_alpha() const;

  static AlphaSummary fixed(double alpha);
  static AlphaSummary from_posterior(AlphaPosterior posterior);
};

// Weighted least squares coefficients on the augmented design:
//   beta(w) = (Xa^T diag(w) Xa)^{-1} Xa^T diag(w) ya.
// Throws singular_gram_error when the weighted Gram matrix has estimated
// condition number above 1e10.
Eigen::VectorXd wls_mean(const AugmentedDesign& design,
                         const Eigen::VectorXd& weights);

// Jacobian matrix R of the WLS functional at the given weights: row c equals
// u_c * x_c^T A^{-1} with A = Xa^T diag(w) Xa and u = ya - Xa beta(w), so
// d beta / d w_c = R^T e_c. Satisfies R^T w = 0 by the normal equations.
Eigen::MatrixXd beta_weight_gradient(const AugmentedDesign& design,
                                     const Eigen::VectorXd& weights);

// First-order (delta-method) covariance of beta(n*): R^T V(n*) R with R the
// Jacobian at E(n*). Works for conditional and marginal moments alike.
Eigen::MatrixXd sandwich_cov(const AugmentedDesign& design,
                             const WeightMoments& moments);

// Closed-form equivalent for conditional moments, using only the mean
// weights: A^{-1} [Xa^T diag(w o u^2) Xa] A^{-1}. Equals sandwich_cov when
// cov = diag(w) - w w^T / total because R^T w = 0 kills the rank-one term.
Eigen::MatrixXd sandwich_cov_direct(const AugmentedDesign& design,
                                    const Eigen::VectorXd& mean_weights);

// Classical OLS with the HC0 heteroscedasticity-consistent covariance:
//   (X^T X)^{-1} X^T diag(u^2) X (X^T X)^{-1}.
// Collinear columns raise singular_gram_error; the ridge-augmented fit is
// the intended fallback for that case.
struct OlsHc0 {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;
};
OlsHc0 hc0(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Point and interval summaries of a fitted functional.
struct FitResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;
  Eigen::VectorXd psd;             // sqrt of the diagonal of cov
  Eigen::VectorXd interval_lower;  // beta -+ z * psd
  Eigen::VectorXd interval_upper;
  Eigen::VectorXd effect_sizes;    // beta / psd
  std::vector<bool> significant;   // interval excludes zero
  double gic2 = 0.0;
  double level = 0.95;
  long n_obs = 0;                  // real observations behind the fit
  AlphaSummary alpha_summary;
  double gram_condition = 0.0;     // condition estimate of the Gram matrix
  std::vector<std::string> column_names;
};

// Builds the summary from coefficients and covariance. `p` is the number of
// penalized coefficients (non-intercept columns) entering the information
// criterion
//   gic2 = (||ya - Xa beta||^2 + 2 p) / (n + alpha_eff)
// with the residual sum taken unweighted over all augmented rows and n the
// number of real observations. The 95% level uses the conventional 1.96;
// other levels use the Gaussian quantile.
FitResult summarize_fit(const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov,
                        const AugmentedDesign& design,
                        const AlphaSummary& alpha_summary, int p,
                        double level = 0.95);

// Convenience pipeline: cluster, ridge-augment, infer the concentration (or
// condition on options.fixed_alpha), take posterior-weighted moments, and
// return the summarized WLS/sandwich fit.
struct FitOptions {
  AlphaPrior prior = AlphaPrior::uniform();
  std::optional<double> fixed_alpha;
  std::optional<RidgeBaseline> baseline;  // default: unit ridge
  ImaginaryMassMode mass_mode = ImaginaryMassMode::per_row;
  double grid_step = 0.005;
  double level = 0.95;
};

FitResult fit_mdp(const Dataset& data, const FitOptions& options = {});

// OLS + HC0 wrapped in the same summary type (alpha plays no role; the
// information criterion uses alpha_eff = 0 and the raw design).
FitResult fit_hc0(const Dataset& data, double level = 0.95);

// Inverse standard normal CDF (Acklam's rational approximation, relative
// error below 1.2e-9), used for interval levels other than 95%.
double gaussian_quantile(double p);

}  // namespace mdpreg
