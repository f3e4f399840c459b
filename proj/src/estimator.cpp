#include "mdpreg/estimator.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "mdpreg/errors.hpp"

namespace mdpreg {

namespace {

constexpr double kConditionLimit = 1e10;

struct GramFactor {
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  double condition = 0.0;
};

void check_weights(const AugmentedDesign& design, const Eigen::VectorXd& w) {
  if (w.size() != design.rows()) {
    throw input_error("weight vector length " + std::to_string(w.size()) +
                      " does not match the augmented design (" +
                      std::to_string(design.rows()) + " rows)");
  }
  if (!w.allFinite() || (w.array() < 0.0).any()) {
    throw input_error("row weights must be finite and nonnegative");
  }
}

// Factors A = Xa^T diag(w) Xa, guarding against (near-)singularity with an
// eigenvalue-based condition estimate. K is small, so the exact symmetric
// eigensolve is cheap.
GramFactor factor_gram(const Eigen::MatrixXd& Xa, const Eigen::VectorXd& w,
                       const char* context) {
  Eigen::MatrixXd A = Xa.transpose() * w.asDiagonal() * Xa;
  A = ((A + A.transpose()) * 0.5).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  const double lmin = ev.minCoeff();
  GramFactor f;
  f.condition = (lmin > 0.0 && lmax > 0.0)
                    ? lmax / lmin
                    : std::numeric_limits<double>::infinity();
  if (!(f.condition < kConditionLimit)) {
    throw singular_gram_error(
        std::string(context) +
            ": weighted Gram matrix is singular or ill-conditioned "
            "(condition estimate " +
            std::to_string(f.condition) + ", limit 1e10)",
        f.condition);
  }
  f.ldlt.compute(A);
  if (f.ldlt.info() != Eigen::Success) {
    throw singular_gram_error(std::string(context) + ": LDLT factorization failed",
                              f.condition);
  }
  return f;
}

Eigen::VectorXd solve_beta(const GramFactor& f, const AugmentedDesign& design,
                           const Eigen::VectorXd& w) {
  return f.ldlt.solve(design.Xa.transpose() * (w.cwiseProduct(design.ya)));
}

Eigen::MatrixXd gradient_from_factor(const GramFactor& f,
                                     const AugmentedDesign& design,
                                     const Eigen::VectorXd& beta) {
  const Eigen::VectorXd u = design.ya - design.Xa * beta;
  // Row c of R is u_c x_c^T A^{-1}.
  Eigen::MatrixXd B = f.ldlt.solve(design.Xa.transpose());  // K x rows
  return u.asDiagonal() * B.transpose();
}

Eigen::MatrixXd symmetrized(Eigen::MatrixXd M) {
  return ((M + M.transpose()) * 0.5).eval();
}

}  // namespace

double gaussian_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw input_error("gaussian_quantile requires p in (0, 1)");
  }
  // Acklam's rational approximation with one Halley refinement.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double AlphaSummary::effective_alpha() const {
  if (fixed_alpha) return *fixed_alpha;
  if (posterior) return posterior->mean();
  throw input_error("alpha summary holds neither a fixed value nor a posterior");
}

AlphaSummary AlphaSummary::fixed(double alpha) {
  AlphaSummary s;
  s.fixed_alpha = alpha;
  return s;
}

AlphaSummary AlphaSummary::from_posterior(AlphaPosterior posterior) {
  AlphaSummary s;
  s.posterior = std::move(posterior);
  return s;
}

Eigen::VectorXd wls_mean(const AugmentedDesign& design,
                         const Eigen::VectorXd& weights) {
  design.validate();
  check_weights(design, weights);
  GramFactor f = factor_gram(design.Xa, weights, "wls_mean");
  return solve_beta(f, design, weights);
}

Eigen::MatrixXd beta_weight_gradient(const AugmentedDesign& design,
                                     const Eigen::VectorXd& weights) {
  design.validate();
  check_weights(design, weights);
  GramFactor f = factor_gram(design.Xa, weights, "beta_weight_gradient");
  return gradient_from_factor(f, design, solve_beta(f, design, weights));
}

Eigen::MatrixXd sandwich_cov(const AugmentedDesign& design,
                             const WeightMoments& moments) {
  design.validate();
  check_weights(design, moments.mean);
  if (moments.cov.rows() != design.rows() || moments.cov.cols() != design.rows()) {
    throw input_error("weight covariance shape does not match the augmented design");
  }
  GramFactor f = factor_gram(design.Xa, moments.mean, "sandwich_cov");
  const Eigen::MatrixXd R =
      gradient_from_factor(f, design, solve_beta(f, design, moments.mean));
  return symmetrized(R.transpose() * moments.cov * R);
}

Eigen::MatrixXd sandwich_cov_direct(const AugmentedDesign& design,
                                    const Eigen::VectorXd& mean_weights) {
  design.validate();
  check_weights(design, mean_weights);
  GramFactor f = factor_gram(design.Xa, mean_weights, "sandwich_cov_direct");
  const Eigen::VectorXd beta = solve_beta(f, design, mean_weights);
  const Eigen::VectorXd u = design.ya - design.Xa * beta;
  const Eigen::MatrixXd meat = design.Xa.transpose() *
                               (mean_weights.array() * u.array().square())
                                   .matrix()
                                   .asDiagonal() *
                               design.Xa;
  // A^{-1} meat A^{-1}. The rank-one part of the multinomial covariance
  // drops out exactly because R^T E(n*) = 0 at the WLS solution.
  return symmetrized(f.ldlt.solve(f.ldlt.solve(meat).transpose()));
}

OlsHc0 hc0(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0 || X.cols() == 0 || y.size() != X.rows()) {
    throw input_error("hc0 requires a nonempty design with matching response length");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw input_error("hc0 design or response contains non-finite values");
  }
  Eigen::MatrixXd A = X.transpose() * X;
  A = symmetrized(std::move(A));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  const double condition = (lmin > 0.0 && lmax > 0.0)
                               ? lmax / lmin
                               : std::numeric_limits<double>::infinity();
  if (!(condition < kConditionLimit)) {
    throw singular_gram_error(
        "hc0: X'X is singular or ill-conditioned (condition estimate " +
            std::to_string(condition) +
            "); collinear columns have no stable OLS solution — the "
            "ridge-augmented fit handles such designs",
        condition);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  OlsHc0 out;
  out.beta = ldlt.solve(X.transpose() * y);
  const Eigen::VectorXd u = y - X * out.beta;
  const Eigen::MatrixXd meat =
      X.transpose() * u.array().square().matrix().asDiagonal() * X;
  out.cov = symmetrized(ldlt.solve(ldlt.solve(meat).transpose()));
  return out;
}

FitResult summarize_fit(const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov,
                        const AugmentedDesign& design,
                        const AlphaSummary& alpha_summary, int p,
                        double level) {
  const Eigen::Index K = beta.size();
  if (cov.rows() != K || cov.cols() != K) {
    throw input_error("coefficient covariance shape does not match beta");
  }
  if (!(level > 0.0) || !(level < 1.0)) {
    throw input_error("interval level must lie in (0, 1)");
  }
  if (p < 0) {
    throw input_error("penalized coefficient count p must be nonnegative");
  }

  FitResult fit;
  fit.beta = beta;
  fit.cov = cov;
  fit.level = level;
  fit.n_obs = design.n();
  fit.alpha_summary = alpha_summary;

  // 95% intervals use the conventional 1.96 multiplier; other levels fall
  // back to the Gaussian quantile.
  const double z = level == 0.95 ? 1.96 : gaussian_quantile(0.5 * (1.0 + level));

  fit.psd.resize(K);
  fit.interval_lower.resize(K);
  fit.interval_upper.resize(K);
  fit.effect_sizes.resize(K);
  fit.significant.assign(static_cast<std::size_t>(K), false);
  const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < K; ++k) {
    double v = cov(k, k);
    if (v < -1e-8 * scale) {
      throw numeric_error("posterior covariance has a negative diagonal entry");
    }
    fit.psd[k] = std::sqrt(std::max(v, 0.0));
    fit.interval_lower[k] = beta[k] - z * fit.psd[k];
    fit.interval_upper[k] = beta[k] + z * fit.psd[k];
    fit.effect_sizes[k] = fit.psd[k] > 0.0
                              ? beta[k] / fit.psd[k]
                              : std::numeric_limits<double>::quiet_NaN();
    fit.significant[static_cast<std::size_t>(k)] =
        fit.interval_lower[k] > 0.0 || fit.interval_upper[k] < 0.0;
  }

  const double rss = (design.ya - design.Xa * beta).squaredNorm();
  fit.gic2 = (rss + 2.0 * static_cast<double>(p)) /
             (static_cast<double>(design.n()) + alpha_summary.effective_alpha());
  return fit;
}

FitResult fit_mdp(const Dataset& data, const FitOptions& options) {
  data.validate();
  const ClusteredData cd = cluster_rows(data);
  const RidgeBaseline baseline = options.baseline.value_or(
      RidgeBaseline::unit_ridge(data.K(), data.has_intercept ? 0 : -1));
  const AugmentedDesign design = augment_ridge(cd, baseline, options.mass_mode);

  AlphaSummary summary;
  WeightMoments moments;
  if (options.fixed_alpha) {
    summary = AlphaSummary::fixed(*options.fixed_alpha);
    moments = conditional_moments(design, *options.fixed_alpha);
  } else {
    summary = AlphaSummary::from_posterior(alpha_posterior(
        options.prior, static_cast<long>(cd.c_n()), cd.n, options.grid_step));
    moments = marginal_moments(design, *summary.posterior);
  }

  GramFactor f = factor_gram(design.Xa, moments.mean, "fit_mdp");
  const Eigen::VectorXd beta = solve_beta(f, design, moments.mean);
  const Eigen::MatrixXd R = gradient_from_factor(f, design, beta);
  const Eigen::MatrixXd cov = symmetrized(R.transpose() * moments.cov * R);

  const int p = static_cast<int>(data.K()) - (data.has_intercept ? 1 : 0);
  FitResult fit = summarize_fit(beta, cov, design, summary, p, options.level);
  fit.gram_condition = f.condition;
  fit.column_names = data.column_names;
  return fit;
}

FitResult fit_hc0(const Dataset& data, double level) {
  data.validate();
  const OlsHc0 ols = hc0(data.X, data.y);

  // Wrap in the shared summary type. Alpha plays no role here: the
  // information criterion uses the raw design and alpha_eff = 0.
  AugmentedDesign raw;
  raw.Xa = data.X;
  raw.ya = data.y;
  raw.counts = Eigen::VectorXd::Ones(data.n());
  raw.S = 0;
  FitResult fit = summarize_fit(ols.beta, ols.cov, raw, AlphaSummary::fixed(0.0),
                                static_cast<int>(data.K()) - (data.has_intercept ? 1 : 0),
                                level);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      ((data.X.transpose() * data.X + (data.X.transpose() * data.X).transpose()) * 0.5)
          .eval(),
      Eigen::EigenvaluesOnly);
  fit.gram_condition = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  fit.column_names = data.column_names;
  return fit;
}

}  // namespace mdpreg
