#include "mdpreg/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mdpreg/errors.hpp"
#include "mdpreg/estimator.hpp"
#include "mdpreg/rng.hpp"

namespace mdpreg {

namespace {

// Draws multinomial counts by chaining conditional binomials, which keeps
// the draw reproducible for a fixed standard library and avoids allocating
// per-category streams.
void multinomial_draw(std::mt19937_64& rng, long trials,
                      const Eigen::VectorXd& probs, Eigen::VectorXd& counts) {
  const Eigen::Index m = probs.size();
  counts.setZero(m);
  long remaining = trials;
  double mass_left = 1.0;
  for (Eigen::Index j = 0; j < m && remaining > 0; ++j) {
    if (j == m - 1) {
      counts[j] = static_cast<double>(remaining);
      break;
    }
    double p = probs[j] / mass_left;
    p = std::clamp(p, 0.0, 1.0);
    long c = 0;
    if (p >= 1.0) {
      c = remaining;
    } else if (p > 0.0) {
      std::binomial_distribution<long> bin(remaining, p);
      c = bin(rng);
    }
    counts[j] = static_cast<double>(c);
    remaining -= c;
    mass_left -= probs[j];
    if (mass_left <= 0.0) mass_left = std::numeric_limits<double>::min();
  }
}

// Probability vector over the augmented rows used by the sampler. In
// per_row ridge mode the specified masses deliberately sum to more
// than one; a multinomial needs a proper probability vector, so the sampler
// (and only the sampler) renormalizes them. The other modes must already be
// normalized up to rounding.
Eigen::VectorXd sampling_probs(const AugmentedDesign& design, double alpha) {
  const double n = static_cast<double>(design.n());
  Eigen::VectorXd q(design.rows());
  q.head(design.c_n()) = design.counts / (alpha + n);
  q.tail(design.S).setConstant(design.imaginary_mass_per_row(alpha) / (alpha + n));
  const double total = q.sum();
  if (design.imaginary_mass_mode != ImaginaryMassMode::per_row &&
      std::abs(total - 1.0) > 1e-12) {
    throw numeric_error(
        "weight sampling probabilities failed to normalize (total " +
        std::to_string(total) + ")");
  }
  return q / total;
}

}  // namespace

// One weight draw at fixed concentration.
//
// Scheme: counts ~ Multinomial(T, q) with T = n + ceil(alpha) + 1 trials,
// then weights = counts * (n + alpha + 1) / T. Writing s for that scale,
//   E(weights)  = (n + alpha + 1) q                      -- exact for every alpha,
//   V(weights)  = s (n + alpha + 1) (diag(q) - q q^T),
// while the target weight covariance is (n + alpha + 1)(diag(q) - q q^T).
// The draw therefore carries covariance factor s = (n+alpha+1)/(n+ceil(alpha)+1),
// which equals 1 exactly when alpha is an integer and approaches 1 like
// O(1/n) otherwise. Moment-matching validation against conditional moments
// should fix alpha at an integer.
Eigen::VectorXd sample_weights(const AugmentedDesign& design, double alpha,
                               std::mt19937_64& rng) {
  design.validate();
  if (!(alpha > 0.0)) {
    throw input_error("sample_weights requires a positive concentration");
  }
  const double n = static_cast<double>(design.n());
  const long trials = design.n() + static_cast<long>(std::ceil(alpha)) + 1;
  const Eigen::VectorXd q = sampling_probs(design, alpha);
  Eigen::VectorXd counts;
  multinomial_draw(rng, trials, q, counts);
  return counts * ((n + alpha + 1.0) / static_cast<double>(trials));
}

namespace {

BootstrapSample bootstrap_impl(const AugmentedDesign& design,
                               const AlphaPosterior* posterior,
                               double fixed_alpha, long B, std::uint64_t seed,
                               int n_threads) {
  design.validate();
  if (B < 1) {
    throw input_error("bootstrap requires at least one replicate");
  }
  if (posterior == nullptr && !(fixed_alpha > 0.0)) {
    throw input_error("bootstrap requires a positive concentration");
  }

  // Inverse-CDF table for resampling the concentration per replicate.
  std::vector<double> cdf;
  if (posterior != nullptr) {
    if (posterior->weights.size() != posterior->grid.values.size() ||
        posterior->weights.size() == 0) {
      throw input_error("concentration posterior grid and weights sizes disagree");
    }
    cdf.resize(static_cast<std::size_t>(posterior->weights.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < posterior->weights.size(); ++i) {
      acc += posterior->weights[i];
      cdf[static_cast<std::size_t>(i)] = acc;
    }
    cdf.back() = 1.0;
  }

  BootstrapSample out;
  out.seed = seed;
  out.betas.resize(B, design.K());
  out.alphas.resize(B);

  constexpr int kMaxAttempts = 200;
  std::vector<long> rejected_per_thread;
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run_range = [&](long b_begin, long b_end, long& rejected) {
    try {
      for (long b = b_begin; b < b_end; ++b) {
        std::mt19937_64 rng = substream(seed, static_cast<std::uint64_t>(b));
        int attempts = 0;
        for (;;) {
          double alpha = fixed_alpha;
          if (posterior != nullptr) {
            const double u = uniform01(rng);
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
            const auto idx = static_cast<Eigen::Index>(it - cdf.begin());
            alpha = posterior->grid.values[std::min(idx, posterior->grid.values.size() - 1)];
          }
          const Eigen::VectorXd w = sample_weights(design, alpha, rng);
          try {
            out.betas.row(b) = wls_mean(design, w).transpose();
            out.alphas[b] = alpha;
            break;
          } catch (const singular_gram_error&) {
            ++rejected;
            if (++attempts > kMaxAttempts) {
              throw numeric_error(
                  "bootstrap replicate " + std::to_string(b) + " was rejected " +
                  std::to_string(attempts) +
                  " times; the design appears ill-posed under resampled weights");
            }
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  int workers = std::max(1, n_threads);
  workers = static_cast<int>(std::min<long>(workers, B));
  rejected_per_thread.assign(static_cast<std::size_t>(workers), 0);
  if (workers == 1) {
    run_range(0, B, rejected_per_thread[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const long chunk = (B + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const long lo = static_cast<long>(t) * chunk;
      const long hi = std::min(B, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, lo, hi,
                        std::ref(rejected_per_thread[static_cast<std::size_t>(t)]));
    }
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (long r : rejected_per_thread) out.rejected += r;
  if (2 * out.rejected > B + out.rejected) {
    throw numeric_error("bootstrap rejection rate exceeded 50% (" +
                        std::to_string(out.rejected) + " rejections for " +
                        std::to_string(B) +
                        " replicates); the design is ill-posed under resampling");
  }
  return out;
}

}  // namespace

BootstrapSample bootstrap_functional(const AugmentedDesign& design, double alpha,
                                     long B, std::uint64_t seed, int n_threads) {
  return bootstrap_impl(design, nullptr, alpha, B, seed, n_threads);
}

BootstrapSample bootstrap_functional(const AugmentedDesign& design,
                                     const AlphaPosterior& posterior, long B,
                                     std::uint64_t seed, int n_threads) {
  return bootstrap_impl(design, &posterior, 0.0, B, seed, n_threads);
}

}  // namespace mdpreg
