#include "mdpreg/lars.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mdpreg/errors.hpp"

namespace mdpreg {

namespace {

void check_standardized(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys) {
  const Eigen::Index n = Xs.rows();
  const Eigen::Index p = Xs.cols();
  if (n < 2 || p < 1 || ys.size() != n) {
    throw input_error("lars_path requires n >= 2 rows and a matching response");
  }
  if (!Xs.allFinite() || !ys.allFinite()) {
    throw input_error("lars_path input contains non-finite values");
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = Xs.col(j).mean();
    const double var = Xs.col(j).squaredNorm() / static_cast<double>(n - 1) -
                       mean * mean * static_cast<double>(n) / static_cast<double>(n - 1);
    if (std::abs(mean) > 1e-6 || std::abs(var - 1.0) > 1e-4) {
      throw input_error("lars_path column " + std::to_string(j) +
                        " is not standardized (mean 0, variance 1 with divisor n-1)");
    }
  }
  if (std::abs(ys.mean()) > 1e-6 * std::max(1.0, ys.cwiseAbs().maxCoeff())) {
    throw input_error("lars_path requires a mean-zero response");
  }
}

}  // namespace

LarsPath lars_path(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys) {
  check_standardized(Xs, ys);
  const Eigen::Index n = Xs.rows();
  const Eigen::Index p = Xs.cols();

  LarsPath path;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
  std::vector<int> active;
  std::vector<bool> in_active(static_cast<std::size_t>(p), false);
  path.steps.push_back({active, beta});

  const double c_floor =
      1e-10 * std::max(1.0, (Xs.transpose() * ys).cwiseAbs().maxCoeff());

  while (static_cast<Eigen::Index>(active.size()) < p) {
    const Eigen::VectorXd c = Xs.transpose() * (ys - mu);

    // Next entrant: largest absolute correlation among inactive columns,
    // ties to the lowest index via the strict comparison in ascending scan.
    int next = -1;
    double cmax = 0.0;
    for (int j = 0; j < p; ++j) {
      if (in_active[static_cast<std::size_t>(j)]) continue;
      const double aj = std::abs(c[j]);
      if (aj > cmax) {
        cmax = aj;
        next = j;
      }
    }
    if (next < 0 || cmax <= c_floor) {
      // Remaining columns are (numerically) orthogonal to the residual:
      // they lie in the span of the active set. Stop the path early.
      path.truncated = true;
      break;
    }

    active.push_back(next);
    in_active[static_cast<std::size_t>(next)] = true;

    const auto a = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd Xa(n, a);
    Eigen::VectorXd s(a);
    for (Eigen::Index i = 0; i < a; ++i) {
      const int j = active[static_cast<std::size_t>(i)];
      s[i] = c[j] >= 0.0 ? 1.0 : -1.0;
      Xa.col(i) = s[i] * Xs.col(j);
    }

    const Eigen::MatrixXd G = Xa.transpose() * Xa;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e12) {
      // The entrant is numerically collinear with the active set; the
      // equiangular direction is undefined.
      active.pop_back();
      in_active[static_cast<std::size_t>(next)] = false;
      path.truncated = true;
      break;
    }
    const Eigen::VectorXd w0 = G.ldlt().solve(Eigen::VectorXd::Ones(a));
    const double ones_w0 = w0.sum();
    if (!(ones_w0 > 0.0)) {
      active.pop_back();
      in_active[static_cast<std::size_t>(next)] = false;
      path.truncated = true;
      break;
    }
    const double AA = 1.0 / std::sqrt(ones_w0);
    const Eigen::VectorXd w = AA * w0;
    const Eigen::VectorXd u = Xa * w;  // equiangular direction, unit norm
    const double C = cmax;

    double gamma = C / AA;  // full least-squares advance of the active set
    if (static_cast<Eigen::Index>(active.size()) < p) {
      const Eigen::VectorXd adir = Xs.transpose() * u;
      for (int j = 0; j < p; ++j) {
        if (in_active[static_cast<std::size_t>(j)]) continue;
        for (const double cand : {(C - c[j]) / (AA - adir[j]),
                                  (C + c[j]) / (AA + adir[j])}) {
          if (cand > 0.0 && cand < gamma) gamma = cand;
        }
      }
    }

    for (Eigen::Index i = 0; i < a; ++i) {
      beta[active[static_cast<std::size_t>(i)]] += gamma * s[i] * w[i];
    }
    mu += gamma * u;
    path.steps.push_back({active, beta});
  }

  for (const auto& step : path.steps) {
    if (step.active.size() == path.entered.size() + 1) {
      path.entered.push_back(step.active.back());
    }
  }
  return path;
}

}  // namespace mdpreg
