#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mdpreg {

// Least-angle regression path on a standardized design (columns mean zero,
// unit variance with divisor n-1; response mean zero).
struct LarsPath {
  struct Step {
    std::vector<int> active;  // column indices in order of entry
    Eigen::VectorXd coef;     // full-length coefficient vector at this step
  };

  std::vector<Step> steps;   // steps[k] has k active columns; steps[0] empty
  std::vector<int> entered;  // entry order over the whole path
  bool truncated = false;    // stopped early due to rank deficiency
};

// Classic equiangular least-angle regression (no lasso modification).
// Correlation ties break toward the lowest column index. When the path runs
// to completion the final step's coefficients equal the OLS solution.
LarsPath lars_path(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys);

}  // namespace mdpreg
