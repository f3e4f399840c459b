#pragma once

#include <Eigen/Dense>

#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace mdpreg {

// A regression dataset in design-matrix form. When `has_intercept` is true
// the first column of X is all ones and is named "(Intercept)".
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> column_names;
  bool has_intercept = true;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index K() const { return X.cols(); }

  // Throws input_error on shape mismatches, non-finite values, empty data,
  // or a claimed intercept column that is not identically one.
  void validate() const;
};

// Distinct (x, y) rows of a dataset with their multiplicities. Row j of
// `rows` holds (x_j1, ..., x_jK, y_j); rows appear in order of first
// occurrence in the source data.
struct ClusteredData {
  Eigen::MatrixXd rows;
  std::vector<long> counts;
  long n = 0;

  Eigen::Index c_n() const { return rows.rows(); }
  Eigen::Index K() const { return rows.cols() - 1; }
};

// Prior scatter for the ridge-type base measure: a per-coefficient variance
// vector. The intercept coordinate carries variance 0 (it is never shrunk).
struct RidgeBaseline {
  Eigen::VectorXd variances;
  bool unit = true;

  // Unit variances on every coordinate except `intercept_index` (pass a
  // negative index for designs without an intercept).
  static RidgeBaseline unit_ridge(Eigen::Index K, Eigen::Index intercept_index = 0);
};

// How the base-measure probability mass is spread over the S imaginary rows.
//   per_row: each imaginary row gets mass alpha / (alpha + n).
//   normalized:    each imaginary row gets mass (alpha / S) / (alpha + n),
//                  so the imaginary block as a whole carries the base-measure
//                  share alpha / (alpha + n).
enum class ImaginaryMassMode { per_row, normalized };

// Clustered real rows stacked above S imaginary rows that stand in for the
// base measure. This is the design every estimator in the library consumes.
struct AugmentedDesign {
  Eigen::MatrixXd Xa;       // (c_n + S) x K
  Eigen::VectorXd ya;       // c_n + S
  Eigen::VectorXd counts;   // multiplicities of the c_n real rows
  Eigen::Index S = 0;
  ImaginaryMassMode imaginary_mass_mode = ImaginaryMassMode::per_row;

  Eigen::Index rows() const { return Xa.rows(); }
  Eigen::Index c_n() const { return Xa.rows() - S; }
  Eigen::Index K() const { return Xa.cols(); }
  long n() const;  // total real observations (sum of counts)

  // Prior mass attached to each imaginary row at concentration alpha,
  // before normalization by (alpha + n).
  double imaginary_mass_per_row(double alpha) const;

  void validate() const;
};

enum class StandardizeMode { center, zscore };

// Records the affine transform applied per column so fitted coefficients can
// be mapped back to the original units.
struct TransformRecord {
  StandardizeMode mode = StandardizeMode::center;
  Eigen::VectorXd shift;   // per design column; 0 for the intercept
  Eigen::VectorXd scale;   // per design column; 1 for the intercept
  double y_shift = 0.0;
  double y_scale = 1.0;
  bool response_transformed = false;

  // Maps coefficients estimated on the standardized data back to the scale
  // of the original dataset (including the intercept adjustment).
  Eigen::VectorXd coefficients_to_original(const Eigen::VectorXd& beta,
                                           bool has_intercept) const;
};

// Collapses duplicate rows. Exact byte-level comparison of the doubles,
// except that -0.0 and +0.0 are identified.
ClusteredData cluster_rows(const Dataset& data);

// Centers (and for zscore, scales to unit variance with divisor n-1) every
// non-intercept column; optionally also the response. Constant columns under
// zscore raise input_error.
std::pair<Dataset, TransformRecord> standardize(const Dataset& data,
                                                StandardizeMode mode,
                                                bool include_response = false);

// Stacks sqrt(diag(variances)) imaginary rows (with zero response) under the
// clustered real rows: S = K, imaginary row k is sqrt(v_k) * e_k.
AugmentedDesign augment_ridge(const ClusteredData& cd,
                              const RidgeBaseline& baseline,
                              ImaginaryMassMode mode = ImaginaryMassMode::per_row);

// Draws S imaginary rows (x..., y) from a user sampler; mass mode is
// `normalized`, i.e. each imputed row represents base-measure share
// (alpha/S)/(alpha+n).
AugmentedDesign impute_general_baseline(
    const ClusteredData& cd,
    const std::function<Eigen::VectorXd(std::mt19937_64&)>& sampler,
    Eigen::Index S, std::mt19937_64& rng);

}  // namespace mdpreg
