#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "mdpreg/alpha.hpp"
#include "mdpreg/dataset.hpp"
#include "mdpreg/errors.hpp"
#include "mdpreg/weights.hpp"
#include "test_support.hpp"

using namespace mdpreg;
using namespace mdpreg::testsupport;

namespace {

AugmentedDesign ridge_design(std::mt19937_64& rng, Eigen::Index n, Eigen::Index k_cov,
                             ImaginaryMassMode mode) {
  const Dataset d = random_dataset(rng, n, k_cov);
  return augment_ridge(cluster_rows(d), RidgeBaseline::unit_ridge(d.K(), 0), mode);
}

}  // namespace

TEST_CASE("conditional moments for two singletons and one imaginary row") {
  // n = 2 distinct rows, S = 1, alpha = 1: every mass is 1/3, the weight
  // total is 4, so the mean is 4/3 per row, the variance 4/3 - (4/3)^2/4 =
  // 8/9, and each covariance -(4/3)^2/4 = -4/9.
  Eigen::MatrixXd Z(2, 1);
  Z << 1.0, 2.0;
  const ClusteredData cd = cluster_rows(make_dataset(Z, Eigen::Vector2d(1.0, 2.0)));
  std::mt19937_64 rng(3);
  const auto sampler = [](std::mt19937_64&) {
    Eigen::VectorXd z(3);
    z << 1.0, 0.0, 0.0;
    return z;
  };
  const AugmentedDesign d = impute_general_baseline(cd, sampler, 1, rng);

  const WeightMoments mom = conditional_moments(d, 1.0);
  REQUIRE(mom.mean.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(mom.mean[i] == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    for (int j = 0; j < 3; ++j) {
      const double want = i == j ? 8.0 / 9.0 : -4.0 / 9.0;
      CHECK(mom.cov(i, j) == doctest::Approx(want).epsilon(1e-13));
    }
  }
  CHECK(mom.conditional_alpha == 1.0);
}

TEST_CASE("conditional moments follow the mass rules of each mode") {
  std::mt19937_64 rng(17);
  const Dataset data = random_dataset(rng, 6, 2);
  const ClusteredData cd = cluster_rows(data);
  const double alpha = 0.8;
  const double n = 6.0;
  const double total = n + alpha + 1.0;

  const AugmentedDesign rowwise = augment_ridge(
      cd, RidgeBaseline::unit_ridge(3, 0), ImaginaryMassMode::per_row);
  const WeightMoments mp = conditional_moments(rowwise, alpha);
  for (Eigen::Index j = 0; j < 6; ++j) {
    CHECK(mp.mean[j] == doctest::Approx(total * 1.0 / (alpha + n)).epsilon(1e-13));
  }
  for (Eigen::Index s = 0; s < 3; ++s) {
    CHECK(mp.mean[6 + s] == doctest::Approx(total * alpha / (alpha + n)).epsilon(1e-13));
  }

  const AugmentedDesign norm = augment_ridge(
      cd, RidgeBaseline::unit_ridge(3, 0), ImaginaryMassMode::normalized);
  const WeightMoments mn = conditional_moments(norm, alpha);
  for (Eigen::Index s = 0; s < 3; ++s) {
    CHECK(mn.mean[6 + s] ==
          doctest::Approx(total * (alpha / 3.0) / (alpha + n)).epsilon(1e-13));
  }
  // In normalized mode the masses form a probability vector, so the weight
  // covariance is singular along the all-ones direction and PSD.
  CHECK((mn.cov * Eigen::VectorXd::Ones(9)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(is_psd(mn.cov));

  // The rank-one identity cov·1 = mean − mean (1ᵀmean)/(n+α+1) holds in every
  // mode by construction.
  for (const WeightMoments* mom : {&mp, &mn}) {
    const Eigen::VectorXd lhs = mom->cov * Eigen::VectorXd::Ones(9);
    const Eigen::VectorXd rhs = mom->mean - mom->mean * (mom->mean.sum() / total);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }

  // The per-row mass rule makes the imaginary masses overshoot a probability
  // vector for K > 1, so its full covariance is indefinite by construction:
  // 1ᵀ cov 1 = Σmean (1 − Σmean/(n+α+1)) < 0. The real-row principal block
  // (mass share below one) stays PSD.
  const double msum = mp.mean.sum();
  CHECK(Eigen::VectorXd::Ones(9).dot(mp.cov * Eigen::VectorXd::Ones(9)) ==
        doctest::Approx(msum * (1.0 - msum / total)).epsilon(1e-10));
  CHECK(msum > total);
  CHECK(is_psd(mp.cov.topLeftCorner(6, 6)));
}

TEST_CASE("conditional moments validate inputs") {
  std::mt19937_64 rng(1);
  const AugmentedDesign d = ridge_design(rng, 5, 1, ImaginaryMassMode::per_row);
  CHECK_THROWS_AS(conditional_moments(d, 0.0), input_error);
  CHECK_THROWS_AS(conditional_moments(d, -1.0), input_error);
}

TEST_CASE("marginal moments match the dense mixture oracle") {
  std::mt19937_64 rng(23);
  for (const auto mode :
       {ImaginaryMassMode::per_row, ImaginaryMassMode::normalized}) {
    const AugmentedDesign d = ridge_design(rng, 12, 3, mode);
    const AlphaPosterior post =
        alpha_posterior(AlphaPrior::uniform(3.0), d.c_n(), d.n());
    const WeightMoments fast = marginal_moments(d, post);
    const WeightMoments naive = naive_marginal_moments(d, post);
    CHECK((fast.mean - naive.mean).cwiseAbs().maxCoeff() <
          1e-12 * naive.mean.cwiseAbs().maxCoeff());
    CHECK(max_scaled_err(fast.cov, naive.cov) < 1e-12);
    CHECK_FALSE(fast.conditional_alpha.has_value());
    if (mode == ImaginaryMassMode::normalized) CHECK(is_psd(fast.cov));
  }
}

TEST_CASE("marginal moments with a one-point posterior equal the conditional ones") {
  std::mt19937_64 rng(29);
  const AugmentedDesign d = ridge_design(rng, 8, 2, ImaginaryMassMode::per_row);

  AlphaPosterior point;
  point.grid = AlphaGrid::standard(3.0, 0.005);
  point.weights = Eigen::VectorXd::Zero(point.grid.values.size());
  const Eigen::Index at = 123;
  point.weights[at] = 1.0;

  const WeightMoments marg = marginal_moments(d, point);
  const WeightMoments cond = conditional_moments(d, point.grid.values[at]);
  CHECK((marg.mean.array() == cond.mean.array()).all());
  CHECK((marg.cov.array() == cond.cov.array()).all());
  CHECK_FALSE(marg.conditional_alpha.has_value());
}

TEST_CASE("marginal covariance exceeds the averaged conditional covariance") {
  // Law of total covariance: mixing over alpha adds the covariance of the
  // conditional means, so diagonal entries must not shrink.
  std::mt19937_64 rng(31);
  const AugmentedDesign d = ridge_design(rng, 10, 2, ImaginaryMassMode::per_row);
  const AlphaPosterior post =
      alpha_posterior(AlphaPrior::truncated_cauchy(3.0), d.c_n(), d.n());
  const WeightMoments marg = marginal_moments(d, post);

  Eigen::MatrixXd avg_cov = Eigen::MatrixXd::Zero(d.rows(), d.rows());
  for (Eigen::Index i = 0; i < post.weights.size(); ++i) {
    if (post.weights[i] == 0.0) continue;
    avg_cov += post.weights[i] * conditional_moments(d, post.grid.values[i]).cov;
  }
  CHECK(((marg.cov - avg_cov).diagonal().array() > -1e-12).all());
}

TEST_CASE("marginal moments validate the posterior") {
  std::mt19937_64 rng(37);
  const AugmentedDesign d = ridge_design(rng, 5, 1, ImaginaryMassMode::per_row);
  AlphaPosterior bad;
  bad.grid = AlphaGrid::standard(3.0, 0.5);
  bad.weights = Eigen::VectorXd::Ones(bad.grid.values.size());  // sums to 6
  CHECK_THROWS_AS(marginal_moments(d, bad), input_error);
  bad.weights.resize(2);
  CHECK_THROWS_AS(marginal_moments(d, bad), input_error);
}
