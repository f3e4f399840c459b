#include "mdpreg/dataset.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <unordered_map>

#include "mdpreg/errors.hpp"

namespace mdpreg {

void Dataset::validate() const {
  if (X.rows() == 0 || X.cols() == 0) {
    throw input_error("dataset is empty: the design matrix has no rows or no columns");
  }
  if (y.size() != X.rows()) {
    throw input_error("response length " + std::to_string(y.size()) +
                      " does not match design row count " + std::to_string(X.rows()));
  }
  if (static_cast<Eigen::Index>(column_names.size()) != X.cols()) {
    throw input_error("got " + std::to_string(column_names.size()) +
                      " column names for " + std::to_string(X.cols()) + " design columns");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw input_error("dataset contains non-finite values");
  }
  if (has_intercept) {
    if ((X.col(0).array() != 1.0).any()) {
      throw input_error("first column is marked as the intercept but is not identically 1");
    }
  }
}

RidgeBaseline RidgeBaseline::unit_ridge(Eigen::Index K, Eigen::Index intercept_index) {
  RidgeBaseline b;
  b.variances = Eigen::VectorXd::Ones(K);
  if (intercept_index >= 0 && intercept_index < K) {
    b.variances[intercept_index] = 0.0;
  }
  b.unit = true;
  return b;
}

long AugmentedDesign::n() const {
  return static_cast<long>(counts.sum() + 0.5);
}

double AugmentedDesign::imaginary_mass_per_row(double alpha) const {
  if (S == 0) return 0.0;
  switch (imaginary_mass_mode) {
    case ImaginaryMassMode::per_row:
      return alpha;
    case ImaginaryMassMode::normalized:
      return alpha / static_cast<double>(S);
  }
  return alpha;
}

void AugmentedDesign::validate() const {
  if (S < 0 || Xa.rows() < S) {
    throw input_error("augmented design has invalid imaginary-row count");
  }
  if (ya.size() != Xa.rows()) {
    throw input_error("augmented response length does not match design rows");
  }
  if (counts.size() != c_n()) {
    throw input_error("count vector length does not match the number of real rows");
  }
  if (c_n() == 0) {
    throw input_error("augmented design has no real rows");
  }
  for (Eigen::Index j = 0; j < counts.size(); ++j) {
    double c = counts[j];
    if (!(c >= 1.0) || c != std::floor(c)) {
      throw input_error("row multiplicities must be positive integers");
    }
  }
  if (!Xa.allFinite() || !ya.allFinite()) {
    throw input_error("augmented design contains non-finite values");
  }
}

namespace {

// Byte key of a row with -0.0 canonicalized to +0.0 so the two zero
// representations land in the same cluster.
std::string row_key(const Eigen::MatrixXd& rows, Eigen::Index i) {
  const Eigen::Index m = rows.cols();
  std::string key(static_cast<std::size_t>(m) * sizeof(double), '\0');
  for (Eigen::Index j = 0; j < m; ++j) {
    double v = rows(i, j);
    if (v == 0.0) v = 0.0;  // maps -0.0 to +0.0
    std::memcpy(key.data() + static_cast<std::size_t>(j) * sizeof(double), &v,
                sizeof(double));
  }
  return key;
}

}  // namespace

ClusteredData cluster_rows(const Dataset& data) {
  data.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index K = data.K();

  Eigen::MatrixXd joint(n, K + 1);
  joint.leftCols(K) = data.X;
  joint.col(K) = data.y;

  std::unordered_map<std::string, Eigen::Index> seen;
  seen.reserve(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> order;
  std::vector<long> counts;
  order.reserve(static_cast<std::size_t>(n));

  for (Eigen::Index i = 0; i < n; ++i) {
    auto [it, inserted] = seen.emplace(row_key(joint, i), static_cast<Eigen::Index>(order.size()));
    if (inserted) {
      order.push_back(i);
      counts.push_back(1);
    } else {
      ++counts[static_cast<std::size_t>(it->second)];
    }
  }

  ClusteredData cd;
  cd.rows.resize(static_cast<Eigen::Index>(order.size()), K + 1);
  for (std::size_t j = 0; j < order.size(); ++j) {
    cd.rows.row(static_cast<Eigen::Index>(j)) = joint.row(order[j]);
  }
  cd.counts = std::move(counts);
  cd.n = static_cast<long>(n);
  return cd;
}

Eigen::VectorXd TransformRecord::coefficients_to_original(
    const Eigen::VectorXd& beta, bool has_intercept) const {
  if (beta.size() != shift.size()) {
    throw input_error("coefficient vector length does not match the recorded transform");
  }
  Eigen::VectorXd out(beta.size());
  double intercept_shift = 0.0;
  const Eigen::Index start = has_intercept ? 1 : 0;
  for (Eigen::Index j = start; j < beta.size(); ++j) {
    out[j] = beta[j] * y_scale / scale[j];
    intercept_shift += out[j] * shift[j];
  }
  if (has_intercept) {
    out[0] = y_shift + y_scale * beta[0] - intercept_shift;
  }
  return out;
}

std::pair<Dataset, TransformRecord> standardize(const Dataset& data,
                                                StandardizeMode mode,
                                                bool include_response) {
  data.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index K = data.K();
  if (mode == StandardizeMode::zscore && n < 2) {
    throw input_error("z-scoring needs at least two rows");
  }

  Dataset out = data;
  TransformRecord rec;
  rec.mode = mode;
  rec.shift = Eigen::VectorXd::Zero(K);
  rec.scale = Eigen::VectorXd::Ones(K);
  rec.response_transformed = include_response;

  const Eigen::Index start = data.has_intercept ? 1 : 0;
  for (Eigen::Index j = start; j < K; ++j) {
    const double mean = data.X.col(j).mean();
    rec.shift[j] = mean;
    out.X.col(j).array() -= mean;
    if (mode == StandardizeMode::zscore) {
      const double ss = out.X.col(j).squaredNorm() / static_cast<double>(n - 1);
      if (!(ss > 0.0)) {
        throw input_error("column '" + data.column_names[static_cast<std::size_t>(j)] +
                          "' is constant and cannot be z-scored");
      }
      const double sd = std::sqrt(ss);
      rec.scale[j] = sd;
      out.X.col(j) /= sd;
    }
  }

  if (include_response) {
    const double mean = data.y.mean();
    rec.y_shift = mean;
    out.y.array() -= mean;
    if (mode == StandardizeMode::zscore) {
      const double ss = out.y.squaredNorm() / static_cast<double>(n - 1);
      if (!(ss > 0.0)) {
        throw input_error("response is constant and cannot be z-scored");
      }
      rec.y_scale = std::sqrt(ss);
      out.y /= rec.y_scale;
    }
  }

  return {std::move(out), std::move(rec)};
}

AugmentedDesign augment_ridge(const ClusteredData& cd,
                              const RidgeBaseline& baseline,
                              ImaginaryMassMode mode) {
  const Eigen::Index K = cd.K();
  if (cd.c_n() == 0) {
    throw input_error("clustered data has no rows");
  }
  if (baseline.variances.size() != K) {
    throw input_error("ridge baseline has " + std::to_string(baseline.variances.size()) +
                      " variances for " + std::to_string(K) + " design columns");
  }
  if ((baseline.variances.array() < 0.0).any()) {
    throw input_error("ridge baseline variances must be nonnegative");
  }

  AugmentedDesign d;
  d.S = K;
  d.Xa.setZero(cd.c_n() + K, K);
  d.Xa.topRows(cd.c_n()) = cd.rows.leftCols(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    d.Xa(cd.c_n() + k, k) = std::sqrt(baseline.variances[k]);
  }
  d.ya.setZero(cd.c_n() + K);
  d.ya.head(cd.c_n()) = cd.rows.col(K);
  d.counts.resize(cd.c_n());
  for (Eigen::Index j = 0; j < cd.c_n(); ++j) {
    d.counts[j] = static_cast<double>(cd.counts[static_cast<std::size_t>(j)]);
  }
  d.imaginary_mass_mode = mode;
  d.validate();
  return d;
}

AugmentedDesign impute_general_baseline(
    const ClusteredData& cd,
    const std::function<Eigen::VectorXd(std::mt19937_64&)>& sampler,
    Eigen::Index S, std::mt19937_64& rng) {
  const Eigen::Index K = cd.K();
  if (S < 1) {
    throw input_error("the imaginary-row count S must be at least 1");
  }
  if (!sampler) {
    throw input_error("baseline sampler is empty");
  }

  AugmentedDesign d;
  d.S = S;
  d.Xa.resize(cd.c_n() + S, K);
  d.ya.resize(cd.c_n() + S);
  d.Xa.topRows(cd.c_n()) = cd.rows.leftCols(K);
  d.ya.head(cd.c_n()) = cd.rows.col(K);
  for (Eigen::Index s = 0; s < S; ++s) {
    Eigen::VectorXd z = sampler(rng);
    if (z.size() != K + 1) {
      throw input_error("baseline sampler returned a row of length " +
                        std::to_string(z.size()) + ", expected " + std::to_string(K + 1));
    }
    if (!z.allFinite()) {
      throw input_error("baseline sampler returned non-finite values");
    }
    d.Xa.row(cd.c_n() + s) = z.head(K).transpose();
    d.ya[cd.c_n() + s] = z[K];
  }
  d.counts.resize(cd.c_n());
  for (Eigen::Index j = 0; j < cd.c_n(); ++j) {
    d.counts[j] = static_cast<double>(cd.counts[static_cast<std::size_t>(j)]);
  }
  d.imaginary_mass_mode = ImaginaryMassMode::normalized;
  d.validate();
  return d;
}

}  // namespace mdpreg
