#include "mdpreg/weights.hpp"

#include <cmath>
#include <string>

#include "mdpreg/errors.hpp"

namespace mdpreg {

WeightMoments conditional_moments(const AugmentedDesign& design, double alpha) {
  design.validate();
  if (!(alpha > 0.0)) {
    throw input_error("conditional_moments requires a positive concentration");
  }
  const double n = static_cast<double>(design.n());
  const double total = n + alpha + 1.0;
  const Eigen::Index m = design.rows();
  const Eigen::Index cn = design.c_n();

  // Normalized mass vector p: posterior predictive masses of the real
  // clusters and (per the configured mode) of each imaginary row. In
  // per_row ridge mode the masses intentionally sum to more than one
  // when S > 1; the moments use them exactly as specified.
  Eigen::VectorXd p(m);
  p.head(cn) = design.counts / (alpha + n);
  p.tail(design.S).setConstant(design.imaginary_mass_per_row(alpha) / (alpha + n));

  WeightMoments mom;
  mom.mean = total * p;
  mom.cov = Eigen::MatrixXd(mom.mean.asDiagonal());
  mom.cov.noalias() -= (mom.mean / total) * mom.mean.transpose();
  mom.conditional_alpha = alpha;
  return mom;
}

WeightMoments marginal_moments(const AugmentedDesign& design,
                               const AlphaPosterior& posterior) {
  design.validate();
  const Eigen::Index g = posterior.grid.values.size();
  if (g == 0 || posterior.weights.size() != g) {
    throw input_error("concentration posterior grid and weights sizes disagree");
  }
  if ((posterior.weights.array() < 0.0).any() ||
      std::abs(posterior.weights.sum() - 1.0) > 1e-8) {
    throw input_error("concentration posterior weights must be nonnegative and sum to 1");
  }

  // A posterior concentrated on a single grid point must reproduce the
  // conditional moments bit for bit, so delegate.
  {
    Eigen::Index nonzero = -1;
    int count = 0;
    for (Eigen::Index i = 0; i < g && count < 2; ++i) {
      if (posterior.weights[i] != 0.0) {
        nonzero = i;
        ++count;
      }
    }
    if (count == 1 && posterior.weights[nonzero] == 1.0) {
      WeightMoments mom = conditional_moments(design, posterior.grid.values[nonzero]);
      mom.conditional_alpha.reset();
      return mom;
    }
  }

  const double n = static_cast<double>(design.n());
  const Eigen::Index m = design.rows();
  const Eigen::Index cn = design.c_n();

  // Conditionally on alpha the mean is s_a (r + alpha q) and the second
  // moment is diag(mean_a) + s_a (r + alpha q)(r + alpha q)^T, with
  // s_a = (n + alpha + 1)/(n + alpha), r the real-row counts (zero on the
  // imaginary block) and q the per-row base mass divided by alpha (zero on
  // the real block). Mixing over the posterior therefore needs only the
  // three scalars A_j = sum_a pi_a s_a alpha^j.
  Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
  r.head(cn) = design.counts;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(m);
  const double mass_base =
      design.imaginary_mass_mode == ImaginaryMassMode::per_row
          ? 1.0
          : 1.0 / static_cast<double>(design.S);
  q.tail(design.S).setConstant(mass_base);

  double a0 = 0.0, a1 = 0.0, a2 = 0.0;
  for (Eigen::Index i = 0; i < g; ++i) {
    const double alpha = posterior.grid.values[i];
    if (!(alpha > 0.0)) {
      throw input_error("concentration grid values must be positive");
    }
    const double s = posterior.weights[i] * (n + alpha + 1.0) / (n + alpha);
    a0 += s;
    a1 += s * alpha;
    a2 += s * alpha * alpha;
  }

  WeightMoments mom;
  mom.mean = a0 * r + a1 * q;
  mom.cov = Eigen::MatrixXd(mom.mean.asDiagonal());
  mom.cov.noalias() += (a0 - a0 * a0) * (r * r.transpose());
  mom.cov.noalias() += (a1 - a0 * a1) * (r * q.transpose() + q * r.transpose());
  mom.cov.noalias() += (a2 - a1 * a1) * (q * q.transpose());
  mom.conditional_alpha.reset();
  return mom;
}

}  // namespace mdpreg
