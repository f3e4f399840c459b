#include "mdpreg/voe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mdpreg/errors.hpp"
#include "mdpreg/lars.hpp"
#include "mdpreg/rng.hpp"
#include "mdpreg/weights.hpp"

namespace mdpreg {

namespace {

void check_treatment_column(const Dataset& data, int treatment_column) {
  const int lo = data.has_intercept ? 1 : 0;
  if (treatment_column < lo || treatment_column >= data.K()) {
    throw input_error("treatment column index " + std::to_string(treatment_column) +
                      " is out of range (non-intercept design columns only)");
  }
}

// Standardizes the columns of M and the vector v in place: mean zero, unit
// variance with divisor rows-1. Throws on constant columns.
void standardize_in_place(Eigen::MatrixXd& M, Eigen::VectorXd& v,
                          const char* context) {
  const Eigen::Index rows = M.rows();
  if (rows < 2) {
    throw input_error(std::string(context) + ": need at least two rows to standardize");
  }
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    M.col(j).array() -= M.col(j).mean();
    const double ss = M.col(j).squaredNorm() / static_cast<double>(rows - 1);
    if (!(ss > 0.0)) {
      throw input_error(std::string(context) + ": column " + std::to_string(j) +
                        " is constant and cannot be standardized");
    }
    M.col(j) /= std::sqrt(ss);
  }
  v.array() -= v.mean();
  const double ss = v.squaredNorm() / static_cast<double>(rows - 1);
  if (!(ss > 0.0)) {
    throw input_error(std::string(context) + ": response is constant");
  }
  v /= std::sqrt(ss);
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::vector<VoECell> voe_analysis(const Dataset& data, int treatment_column,
                                  const AlphaPrior& prior,
                                  const VoEOptions& options) {
  data.validate();
  if (!data.has_intercept) {
    throw input_error("voe_analysis expects a design with an intercept column");
  }
  check_treatment_column(data, treatment_column);
  const Eigen::Index K = data.K();
  const Eigen::Index Kp = K - 1;  // candidate covariates (non-intercept)
  const Eigen::Index n = data.n();
  const int t_lars = treatment_column - 1;

  const AlphaGrid grid = AlphaGrid::standard(prior.xi, options.grid_step);

  // Standalone refits depend on alpha only through the row weights, so the
  // clustered, ridge-augmented design for each covariate subset is cached
  // across the whole grid.
  std::map<std::vector<int>, AugmentedDesign> design_cache;
  const auto subset_design = [&](const std::vector<int>& subset) -> const AugmentedDesign& {
    auto it = design_cache.find(subset);
    if (it != design_cache.end()) return it->second;
    Dataset sub;
    sub.has_intercept = true;
    sub.y = data.y;
    sub.X.resize(n, static_cast<Eigen::Index>(subset.size()) + 1);
    sub.X.col(0).setOnes();
    sub.column_names = {"(Intercept)"};
    for (std::size_t j = 0; j < subset.size(); ++j) {
      sub.X.col(static_cast<Eigen::Index>(j) + 1) = data.X.col(subset[j]);
      sub.column_names.push_back(data.column_names[static_cast<std::size_t>(subset[j])]);
    }
    AugmentedDesign d = augment_ridge(cluster_rows(sub),
                                      RidgeBaseline::unit_ridge(sub.K(), 0),
                                      options.mass_mode);
    return design_cache.emplace(subset, std::move(d)).first->second;
  };

  std::vector<VoECell> cells;
  for (Eigen::Index gi = 0; gi < grid.values.size(); ++gi) {
    const double alpha = grid.values[gi];

    // Model-search design: raw covariate rows above the sqrt(alpha)-scaled
    // unit-ridge rows (the intercept's ridge row is identically zero), all
    // columns and the response standardized.
    Eigen::MatrixXd M(n + K, Kp);
    M.topRows(n) = data.X.rightCols(Kp);
    M.bottomRows(K).setZero();
    for (Eigen::Index j = 0; j < Kp; ++j) {
      M(n + 1 + j, j) = std::sqrt(alpha);
    }
    Eigen::VectorXd v(n + K);
    v.head(n) = data.y;
    v.tail(K).setZero();
    standardize_in_place(M, v, "voe_analysis");

    const LarsPath path = lars_path(M, v);
    for (const auto& step : path.steps) {
      if (step.active.empty()) continue;
      if (std::find(step.active.begin(), step.active.end(), t_lars) ==
          step.active.end()) {
        continue;
      }
      std::vector<int> subset(step.active.begin(), step.active.end());
      for (int& j : subset) j += 1;  // map model-search columns to design columns
      std::sort(subset.begin(), subset.end());

      const AugmentedDesign& d = subset_design(subset);
      const WeightMoments moments = conditional_moments(d, alpha);
      const Eigen::VectorXd beta = wls_mean(d, moments.mean);
      const Eigen::MatrixXd cov = sandwich_cov_direct(d, moments.mean);
      const FitResult fit =
          summarize_fit(beta, cov, d, AlphaSummary::fixed(alpha),
                        static_cast<int>(subset.size()), options.level);

      const auto t_pos = static_cast<Eigen::Index>(
          1 + (std::lower_bound(subset.begin(), subset.end(), treatment_column) -
               subset.begin()));
      VoECell cell;
      cell.alpha = alpha;
      cell.subset = std::move(subset);
      cell.beta_T = fit.beta[t_pos];
      cell.psd_T = fit.psd[t_pos];
      if (!(cell.psd_T > 0.0)) {
        throw numeric_error("degenerate treatment dispersion in a model-search cell");
      }
      cell.effect_size = cell.beta_T / cell.psd_T;
      cell.gic2 = fit.gic2;
      cells.push_back(std::move(cell));
    }
  }

  std::sort(cells.begin(), cells.end(), [](const VoECell& a, const VoECell& b) {
    if (a.gic2 != b.gic2) return a.gic2 < b.gic2;
    if (a.alpha != b.alpha) return a.alpha < b.alpha;
    return a.subset < b.subset;
  });
  return cells;
}

SensitivityDraw sensitivity_draw_at(const FitResult& fit, const Dataset& data,
                                    int treatment_column, double gamma,
                                    const Eigen::VectorXd& lambda) {
  data.validate();
  check_treatment_column(data, treatment_column);
  if (fit.beta.size() != data.K() || fit.psd.size() != data.K()) {
    throw input_error("fit dimensions do not match the dataset");
  }

  const Eigen::VectorXd t = data.X.col(treatment_column);
  if (std::abs(t.mean()) > 1e-8 * std::max(1.0, t.cwiseAbs().maxCoeff())) {
    throw input_error("the treatment column must be centered before sensitivity analysis");
  }

  std::vector<int> others;
  for (int j = data.has_intercept ? 1 : 0; j < data.K(); ++j) {
    if (j != treatment_column) others.push_back(j);
  }
  const auto expect = static_cast<Eigen::Index>(2 + others.size());
  if (lambda.size() != expect) {
    throw input_error("lambda must hold (lambda_0, lambda_T, covariates...): expected " +
                      std::to_string(expect) + " entries, got " +
                      std::to_string(lambda.size()));
  }

  // Exposure-model linear predictor without the treatment term.
  Eigen::VectorXd base = Eigen::VectorXd::Constant(data.n(), lambda[0]);
  for (std::size_t j = 0; j < others.size(); ++j) {
    base += lambda[static_cast<Eigen::Index>(j) + 2] * data.X.col(others[j]);
  }

  const double t1 = t.maxCoeff();
  const double t0 = t.minCoeff();
  double mu1 = 0.0, mu0 = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    mu1 += logistic(base[i] + lambda[1] * t1);
    mu0 += logistic(base[i] + lambda[1] * t0);
  }
  mu1 /= static_cast<double>(data.n());
  mu0 /= static_cast<double>(data.n());

  SensitivityDraw draw;
  draw.gamma = gamma;
  draw.lambda = lambda;
  draw.mu1 = mu1;
  draw.mu0 = mu0;
  draw.beta_T_adjusted = fit.beta[treatment_column] - gamma * (mu1 - mu0);
  const double psd = fit.psd[treatment_column];
  if (!(psd > 0.0)) {
    throw numeric_error("treatment dispersion is zero; adjusted effect size undefined");
  }
  draw.es_adjusted = draw.beta_T_adjusted / psd;
  return draw;
}

std::vector<SensitivityDraw> sensitivity_analysis(const FitResult& fit,
                                                  const Dataset& data,
                                                  int treatment_column,
                                                  int n_draws,
                                                  std::uint64_t seed) {
  if (n_draws < 1) {
    throw input_error("sensitivity_analysis requires at least one draw");
  }
  data.validate();
  check_treatment_column(data, treatment_column);

  const auto lambda_len =
      static_cast<Eigen::Index>(1 + data.K() - (data.has_intercept ? 1 : 0));
  std::vector<SensitivityDraw> draws;
  draws.reserve(static_cast<std::size_t>(n_draws));
  for (int d = 0; d < n_draws; ++d) {
    std::mt19937_64 rng = substream(seed, static_cast<std::uint64_t>(d));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double gamma = normal(rng);
    Eigen::VectorXd lambda(lambda_len);
    for (Eigen::Index j = 0; j < lambda_len; ++j) lambda[j] = normal(rng);
    draws.push_back(sensitivity_draw_at(fit, data, treatment_column, gamma, lambda));
  }
  return draws;
}

}  // namespace mdpreg
