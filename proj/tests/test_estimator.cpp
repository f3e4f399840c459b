#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "het_dataset.hpp"
#include "mdpreg/alpha.hpp"
#include "mdpreg/dataset.hpp"
#include "mdpreg/errors.hpp"
#include "mdpreg/estimator.hpp"
#include "mdpreg/weights.hpp"
#include "test_support.hpp"

using namespace mdpreg;
using namespace mdpreg::testsupport;

namespace {

Dataset het_dataset() {
  Eigen::MatrixXd Z(50, 1);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) {
    Z(i, 0) = testdata::kHetX[i];
    y[i] = testdata::kHetY[i];
  }
  return make_dataset(Z, y);
}

}  // namespace

TEST_CASE("wls on the ridge design solves the penalized normal equations") {
  // X = [1 | (1,2,3)], y = (1,2,3), unit ridge, alpha = 1:
  // (X'X + diag(0,1)) beta = X'y has the exact solution (2/3, 2/3).
  Eigen::MatrixXd Z(3, 1);
  Z << 1, 2, 3;
  const Dataset d = make_dataset(Z, Eigen::Vector3d(1, 2, 3));
  const AugmentedDesign design =
      augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(2, 0));
  const Eigen::VectorXd beta =
      wls_mean(design, conditional_moments(design, 1.0).mean);
  CHECK(beta[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(beta[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("wls matches the independent ridge oracle on random instances") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> n_dist(5, 50);
  std::uniform_int_distribution<int> k_dist(1, 4);
  for (int rep = 0; rep < 25; ++rep) {
    const Dataset d = random_dataset(rng, n_dist(rng), k_dist(rng));
    const AugmentedDesign design =
        augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(d.K(), 0));
    for (const double alpha : {0.1, 1.0, 3.0}) {
      const Eigen::VectorXd got =
          wls_mean(design, conditional_moments(design, alpha).mean);
      Eigen::VectorXd v = Eigen::VectorXd::Ones(d.K());
      v[0] = 0.0;
      const Eigen::VectorXd want = ridge_oracle(d.X, d.y, v, alpha);
      CHECK((got - want).norm() < 1e-10 * want.norm());
    }
  }
}

TEST_CASE("wls is invariant to rescaling all weights") {
  std::mt19937_64 rng(7);
  const Dataset d = random_dataset(rng, 20, 3);
  const AugmentedDesign design =
      augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(d.K(), 0));
  std::uniform_real_distribution<double> unif(0.2, 2.0);
  Eigen::VectorXd w(design.rows());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = unif(rng);
  const Eigen::VectorXd b1 = wls_mean(design, w);
  const Eigen::VectorXd b2 = wls_mean(design, (7.5 * w).eval());
  CHECK((b1 - b2).cwiseAbs().maxCoeff() < 1e-12 * b1.cwiseAbs().maxCoeff());
}

TEST_CASE("weight gradient is orthogonal to the weights and matches finite differences") {
  std::mt19937_64 rng(13);
  const Dataset d = random_dataset(rng, 15, 2);
  const AugmentedDesign design =
      augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(d.K(), 0));
  const Eigen::VectorXd w = conditional_moments(design, 0.7).mean;
  const Eigen::MatrixXd R = beta_weight_gradient(design, w);

  // Normal equations: R^T w = 0.
  CHECK((R.transpose() * w).cwiseAbs().maxCoeff() < 1e-10);

  // Directional derivative check against central differences.
  const double h = 1e-6;
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd dir(design.rows());
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = unif(rng);
  const Eigen::VectorXd bp = wls_mean(design, (w + h * dir).eval());
  const Eigen::VectorXd bm = wls_mean(design, (w - h * dir).eval());
  const Eigen::VectorXd fd = (bp - bm) / (2.0 * h);
  const Eigen::VectorXd an = R.transpose() * dir;
  CHECK((fd - an).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, an.cwiseAbs().maxCoeff()));
}

TEST_CASE("both sandwich forms agree for conditional moments") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset d = random_dataset(rng, 25, 3);
    for (const auto mode :
         {ImaginaryMassMode::per_row, ImaginaryMassMode::normalized}) {
      const AugmentedDesign design =
          augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(d.K(), 0), mode);
      for (const double alpha : {0.05, 1.0, 2.5}) {
        const WeightMoments mom = conditional_moments(design, alpha);
        const Eigen::MatrixXd v1 = sandwich_cov(design, mom);
        const Eigen::MatrixXd v2 = sandwich_cov_direct(design, mom.mean);
        CHECK(max_scaled_err(v1, v2) < 1e-10);
        CHECK(is_psd(v1));
      }
    }
  }
}

TEST_CASE("hc0 closed form on the intercept-only design") {
  // X = (1,1)', y = (0,2): beta = 1, residuals (-1,1), V = 2/4 = 0.5.
  Eigen::MatrixXd X(2, 1);
  X << 1, 1;
  const OlsHc0 fit = hc0(X, Eigen::Vector2d(0.0, 2.0));
  CHECK(fit.beta[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("hc0 rejects collinear designs and points at the ridge fit") {
  Eigen::MatrixXd X(5, 3);
  X.col(0).setOnes();
  X.col(1) << 1, 2, 3, 4, 5;
  X.col(2) = 2.0 * X.col(1) - 3.0 * X.col(0);  // exact collinearity
  Eigen::VectorXd y(5);
  y << 1, 0, 2, 1, 3;
  try {
    hc0(X, y);
    FAIL("expected singular_gram_error");
  } catch (const singular_gram_error& e) {
    CHECK(std::string(e.what()).find("ridge") != std::string::npos);
    CHECK(!(e.condition_estimate < 1e10));
  }
}

TEST_CASE("the exact zero-concentration limit matches scaled HC0") {
  // With weights (n+1)/n on each distinct real row and 0 on the imaginary
  // rows, the sandwich equals (n/(n+1)) HC0 algebraically.
  const Dataset d = het_dataset();
  const AugmentedDesign design =
      augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(2, 0));
  const auto n = static_cast<double>(d.n());

  WeightMoments limit;
  limit.mean = Eigen::VectorXd::Zero(design.rows());
  limit.mean.head(design.c_n()) =
      design.counts * ((n + 1.0) / n);
  limit.cov = Eigen::MatrixXd(limit.mean.asDiagonal());
  limit.cov.noalias() -= (limit.mean / (n + 1.0)) * limit.mean.transpose();
  limit.conditional_alpha = 0.0;

  const Eigen::MatrixXd got = sandwich_cov(design, limit);
  const Eigen::MatrixXd want = (n / (n + 1.0)) * hc0(d.X, d.y).cov;
  CHECK(max_scaled_err(got, want) < 1e-10);

  // And the beta at those weights is plain OLS.
  const Eigen::VectorXd beta = wls_mean(design, limit.mean);
  const Eigen::VectorXd ols = hc0(d.X, d.y).beta;
  CHECK((beta - ols).cwiseAbs().maxCoeff() < 1e-12 * ols.cwiseAbs().maxCoeff());
}

TEST_CASE("the conditional sandwich at alpha = 0.005 approaches scaled HC0") {
  const Dataset d = het_dataset();
  const AugmentedDesign design =
      augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(2, 0));
  const auto n = static_cast<double>(d.n());
  const Eigen::MatrixXd got =
      sandwich_cov(design, conditional_moments(design, 0.005));
  const Eigen::MatrixXd want = (n / (n + 1.0)) * hc0(d.X, d.y).cov;
  CHECK(max_rel_err(got, want) < 0.005);
}

TEST_CASE("summarize_fit builds intervals, effect sizes and flags") {
  Eigen::MatrixXd Z(4, 1);
  Z << -1, 0, 1, 2;
  const Dataset d = make_dataset(Z, Eigen::Vector4d(0.0, 0.1, 0.2, 0.3));
  const AugmentedDesign design =
      augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(2, 0));

  Eigen::VectorXd beta(2);
  beta << 0.5, -2.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 0.09, 0.0, 0.0, 0.25;
  const FitResult fit = summarize_fit(beta, cov, design, AlphaSummary::fixed(1.0), 1);

  CHECK(fit.psd[0] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(fit.psd[1] == doctest::Approx(0.5).epsilon(1e-14));
  // The 95% multiplier is exactly 1.96.
  CHECK(fit.interval_upper[0] == doctest::Approx(0.5 + 1.96 * 0.3).epsilon(1e-14));
  CHECK(fit.interval_lower[1] == doctest::Approx(-2.0 - 1.96 * 0.5).epsilon(1e-14));
  CHECK(fit.effect_sizes[1] == doctest::Approx(-4.0).epsilon(1e-14));
  CHECK_FALSE(fit.significant[0]);  // 0.5 ± 0.588 straddles zero
  CHECK(fit.significant[1]);
  CHECK(fit.n_obs == 4);

  // gic2 = (rss over augmented rows + 2p) / (n + alpha).
  const double rss = (design.ya - design.Xa * beta).squaredNorm();
  CHECK(fit.gic2 == doctest::Approx((rss + 2.0) / 5.0).epsilon(1e-13));
}

TEST_CASE("summarize_fit with a perfect fit reduces to the penalty term") {
  Eigen::MatrixXd Z(3, 1);
  Z << 1, 2, 3;
  Dataset d = make_dataset(Z, Eigen::Vector3d::Zero());
  AugmentedDesign design =
      augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(2, 0));
  const FitResult fit =
      summarize_fit(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), design,
                    AlphaSummary::fixed(2.0), 1);
  CHECK(fit.gic2 == doctest::Approx(2.0 / 5.0).epsilon(1e-14));
}

TEST_CASE("summarize_fit rejects a negative covariance diagonal") {
  Eigen::MatrixXd Z(2, 1);
  Z << 1, 2;
  const Dataset d = make_dataset(Z, Eigen::Vector2d(1, 2));
  const AugmentedDesign design =
      augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(2, 0));
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(summarize_fit(Eigen::Vector2d::Zero(), cov, design,
                                AlphaSummary::fixed(1.0), 1),
                  numeric_error);
}

TEST_CASE("gaussian_quantile hits reference values") {
  CHECK(gaussian_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(gaussian_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-12));
  CHECK(std::abs(gaussian_quantile(0.5)) < 1e-12);
  CHECK(gaussian_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK_THROWS_AS(gaussian_quantile(0.0), input_error);
  CHECK_THROWS_AS(gaussian_quantile(1.0), input_error);
}

TEST_CASE("fit_mdp reproduces the externally validated pipeline values") {
  // Five-point dataset checked against an independent implementation of the
  // whole pipeline (posterior, marginal moments, WLS, sandwich).
  Eigen::MatrixXd Z(5, 1);
  Z << 1.0, 2.0, 3.0, 4.0, 2.2;
  Eigen::VectorXd y(5);
  y << 1.0, 2.0, 3.0, 2.5, 1.5;
  const FitResult fit = fit_mdp(make_dataset(Z, y));

  CHECK(fit.beta[0] == doctest::Approx(1.03783435).epsilon(1e-7));
  CHECK(fit.beta[1] == doctest::Approx(0.39433019).epsilon(1e-7));
  CHECK(fit.psd[0] == doctest::Approx(0.36039238).epsilon(1e-6));
  CHECK(fit.psd[1] == doctest::Approx(0.12910341).epsilon(1e-6));
  REQUIRE(fit.alpha_summary.posterior.has_value());
  CHECK(fit.alpha_summary.effective_alpha() ==
        doctest::Approx(2.287457099832354).epsilon(1e-12));
  CHECK(fit.gram_condition > 1.0);
  CHECK(fit.column_names[1] == "x1");
}

TEST_CASE("fit_mdp with a fixed concentration uses conditional moments") {
  std::mt19937_64 rng(41);
  const Dataset d = random_dataset(rng, 18, 2);
  FitOptions opts;
  opts.fixed_alpha = 1.0;
  const FitResult fit = fit_mdp(d, opts);
  CHECK(fit.alpha_summary.fixed_alpha == 1.0);

  const AugmentedDesign design =
      augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(d.K(), 0));
  const WeightMoments mom = conditional_moments(design, 1.0);
  const Eigen::VectorXd beta = wls_mean(design, mom.mean);
  CHECK((fit.beta - beta).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("the ridge fit survives a design that breaks OLS") {
  // One covariate is an exact affine image of another, mimicking a saturated
  // year/year-squared pair: OLS has no solution, the ridge posterior does.
  Eigen::MatrixXd Z(8, 2);
  Z.col(0) << 1, 2, 3, 4, 5, 6, 7, 8;
  Z.col(1) = 3.0 * Z.col(0).array() - 2.0;
  Eigen::VectorXd y(8);
  y << 2, 1, 3, 5, 4, 6, 8, 7;
  const Dataset d = make_dataset(Z, y);

  CHECK_THROWS_AS(fit_hc0(d), singular_gram_error);
  const FitResult fit = fit_mdp(d);
  CHECK(fit.beta.allFinite());
  CHECK(fit.psd.allFinite());
  CHECK(fit.gram_condition < 1e10);
}

TEST_CASE("fit_hc0 wraps the plain OLS/HC0 estimates") {
  std::mt19937_64 rng(43);
  const Dataset d = random_dataset(rng, 30, 2);
  const FitResult fit = fit_hc0(d);
  const OlsHc0 direct = hc0(d.X, d.y);
  CHECK((fit.beta - direct.beta).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(max_scaled_err(fit.cov, direct.cov) < 1e-14);
  CHECK(fit.alpha_summary.effective_alpha() == 0.0);
  const double rss = (d.y - d.X * direct.beta).squaredNorm();
  CHECK(fit.gic2 == doctest::Approx((rss + 4.0) / 30.0).epsilon(1e-12));
}

TEST_CASE("wls validates weights") {
  std::mt19937_64 rng(47);
  const Dataset d = random_dataset(rng, 10, 1);
  const AugmentedDesign design =
      augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(2, 0));
  Eigen::VectorXd w = Eigen::VectorXd::Ones(design.rows());
  w[0] = -0.1;
  CHECK_THROWS_AS(wls_mean(design, w), input_error);
  CHECK_THROWS_AS(wls_mean(design, Eigen::VectorXd::Ones(3)), input_error);
}
