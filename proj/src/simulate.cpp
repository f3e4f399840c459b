#include "mdpreg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mdpreg/alpha.hpp"
#include "mdpreg/errors.hpp"
#include "mdpreg/estimator.hpp"
#include "mdpreg/rng.hpp"
#include "mdpreg/weights.hpp"

namespace mdpreg {

std::string to_string(CovariateDist dist) {
  switch (dist) {
    case CovariateDist::uniform01: return "uniform01";
    case CovariateDist::exponential1: return "exponential1";
    case CovariateDist::normal25: return "normal25";
    case CovariateDist::ar1_student: return "ar1_student";
  }
  return "?";
}

std::string to_string(SimModel model) {
  switch (model) {
    case SimModel::mdp_uniform: return "mdp_uniform";
    case SimModel::mdp_cauchy: return "mdp_cauchy";
    case SimModel::hc0: return "hc0";
    case SimModel::oracle_unbounded: return "oracle_unbounded";
  }
  return "?";
}

Eigen::VectorXd draw_covariates(CovariateDist dist, long n,
                                std::mt19937_64& rng) {
  if (n < 2) {
    throw input_error("simulated cells need at least two observations");
  }
  Eigen::VectorXd x(n);
  switch (dist) {
    case CovariateDist::uniform01: {
      std::uniform_real_distribution<double> d(0.0, 1.0);
      for (long i = 0; i < n; ++i) x[i] = d(rng);
      break;
    }
    case CovariateDist::exponential1: {
      std::exponential_distribution<double> d(1.0);
      for (long i = 0; i < n; ++i) x[i] = d(rng);
      break;
    }
    case CovariateDist::normal25: {
      std::normal_distribution<double> d(0.0, 5.0);
      for (long i = 0; i < n; ++i) x[i] = d(rng);
      break;
    }
    case CovariateDist::ar1_student: {
      // x_i = 1 + 0.5 x_{i-1} + t_{n-1} noise, started at x_0 = 0 with no
      // burn-in.
      std::student_t_distribution<double> d(static_cast<double>(n - 1));
      double prev = 0.0;
      for (long i = 0; i < n; ++i) {
        prev = 1.0 + 0.5 * prev + d(rng);
        x[i] = prev;
      }
      break;
    }
  }
  return x;
}

double heteroscedastic_sd(double a_h, double x) {
  return std::exp(0.5 * a_h * (x + x * x));
}

Dataset simulate_dataset(const SimConfig& config, std::mt19937_64& rng) {
  const long n = config.n;
  Eigen::VectorXd x = draw_covariates(config.covariate_dist, n, rng);

  // The response variance uses the raw covariate; centering happens after.
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    y[i] = 1.0 + x[i] + heteroscedastic_sd(config.a_h, x[i]) * normal(rng);
  }
  x.array() -= x.mean();

  Dataset data;
  data.y = std::move(y);
  data.X.resize(n, 2);
  data.X.col(0).setOnes();
  data.X.col(1) = x;
  data.column_names = {"(Intercept)", "x"};
  data.has_intercept = true;
  return data;
}

namespace {

constexpr double kTrueSlope = 1.0;

int resolve_threads(int n_threads) {
  if (n_threads > 0) return n_threads;
  if (const char* env = std::getenv("MDPREG_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 16u));
}

struct ModelCache {
  AlphaPosterior posterior;       // concentration posterior at c_n = n
  WeightMoments moments;          // marginal moments for all-distinct rows
};

// Replicate outcome codes.
enum : signed char { kMiss = 0, kCover = 1, kFailure = 2 };

signed char interval_outcome(const Eigen::VectorXd& beta,
                             const Eigen::MatrixXd& cov) {
  const double psd = std::sqrt(std::max(cov(1, 1), 0.0));
  const double lo = beta[1] - 1.96 * psd;
  const double hi = beta[1] + 1.96 * psd;
  return (lo <= kTrueSlope && kTrueSlope <= hi) ? kCover : kMiss;
}

}  // namespace

CoverageTable coverage_study(const std::vector<SimConfig>& configs,
                             const std::vector<SimModel>& models, long reps,
                             std::uint64_t seed, int n_threads) {
  if (configs.empty() || models.empty()) {
    throw input_error("coverage_study needs at least one cell and one model");
  }
  if (reps < 1) {
    throw input_error("coverage_study needs at least one replicate");
  }
  const int workers = resolve_threads(n_threads);
  const auto n_models = static_cast<long>(models.size());

  CoverageTable table;
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const SimConfig& config = configs[ci];

    // For continuous covariates every replicate has n distinct rows, so the
    // concentration posterior and the marginal weight moments are the same
    // across replicates; build them once per cell. (Replicates with ties
    // fall back to a fresh computation.)
    std::vector<ModelCache> caches(models.size());
    AugmentedDesign shape;  // structural template: counts/S/mode only
    shape.Xa = Eigen::MatrixXd::Zero(config.n + 2, 2);
    shape.Xa.col(0).head(config.n).setOnes();
    shape.Xa.col(1).head(config.n) = Eigen::VectorXd::LinSpaced(config.n, 0.0, 1.0);
    shape.Xa(config.n + 1, 1) = 1.0;
    shape.ya = Eigen::VectorXd::Zero(config.n + 2);
    shape.counts = Eigen::VectorXd::Ones(config.n);
    shape.S = 2;
    shape.imaginary_mass_mode = ImaginaryMassMode::normalized;
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      if (models[mi] == SimModel::mdp_uniform || models[mi] == SimModel::mdp_cauchy) {
        const AlphaPrior prior = models[mi] == SimModel::mdp_uniform
                                     ? AlphaPrior::uniform(3.0)
                                     : AlphaPrior::truncated_cauchy(3.0);
        caches[mi].posterior = alpha_posterior(prior, config.n, config.n);
        caches[mi].moments = marginal_moments(shape, caches[mi].posterior);
      }
    }

    std::vector<signed char> outcomes(static_cast<std::size_t>(reps * n_models), kMiss);
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto run_range = [&](long r_begin, long r_end) {
      try {
        for (long r = r_begin; r < r_end; ++r) {
          std::mt19937_64 rng = substream(
              seed, static_cast<std::uint64_t>(ci) * static_cast<std::uint64_t>(reps) +
                        static_cast<std::uint64_t>(r));
          const Dataset data = simulate_dataset(config, rng);
          const ClusteredData cd = cluster_rows(data);
          AugmentedDesign design;
          bool have_design = false;

          for (std::size_t mi = 0; mi < models.size(); ++mi) {
            signed char& slot = outcomes[static_cast<std::size_t>(r * n_models) + mi];
            const SimModel model = models[mi];
            try {
              switch (model) {
                case SimModel::oracle_unbounded:
                  // Control model: an unbounded interval covers by
                  // construction.
                  slot = kCover;
                  break;
                case SimModel::hc0: {
                  const OlsHc0 fit = hc0(data.X, data.y);
                  slot = interval_outcome(fit.beta, fit.cov);
                  break;
                }
                case SimModel::mdp_uniform:
                case SimModel::mdp_cauchy: {
                  if (!have_design) {
                    design = augment_ridge(cd, RidgeBaseline::unit_ridge(2, 0),
                                           ImaginaryMassMode::normalized);
                    have_design = true;
                  }
                  const ModelCache& cache = caches[mi];
                  Eigen::VectorXd beta;
                  Eigen::MatrixXd cov;
                  if (cd.c_n() == cd.n) {
                    beta = wls_mean(design, cache.moments.mean);
                    cov = sandwich_cov(design, cache.moments);
                  } else {
                    const AlphaPrior prior = model == SimModel::mdp_uniform
                                                 ? AlphaPrior::uniform(3.0)
                                                 : AlphaPrior::truncated_cauchy(3.0);
                    const AlphaPosterior post =
                        alpha_posterior(prior, cd.c_n(), cd.n);
                    const WeightMoments moments = marginal_moments(design, post);
                    beta = wls_mean(design, moments.mean);
                    cov = sandwich_cov(design, moments);
                  }
                  slot = interval_outcome(beta, cov);
                  break;
                }
              }
            } catch (const numeric_error&) {
              slot = kFailure;
            }
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    };

    const int cell_workers = static_cast<int>(std::min<long>(workers, reps));
    if (cell_workers <= 1) {
      run_range(0, reps);
    } else {
      std::vector<std::thread> pool;
      const long chunk = (reps + cell_workers - 1) / cell_workers;
      for (int t = 0; t < cell_workers; ++t) {
        const long lo = static_cast<long>(t) * chunk;
        const long hi = std::min(reps, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(run_range, lo, hi);
      }
      for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      SimCellResult cell;
      cell.config = config;
      cell.model = models[mi];
      cell.reps = reps;
      long hits = 0;
      for (long r = 0; r < reps; ++r) {
        const signed char o = outcomes[static_cast<std::size_t>(r * n_models) + mi];
        if (o == kFailure) {
          ++cell.failures;
        } else if (o == kCover) {
          ++hits;
        }
      }
      const long effective = reps - cell.failures;
      cell.coverage = effective > 0 ? static_cast<double>(hits) /
                                          static_cast<double>(effective)
                                    : 0.0;
      cell.mc_se = effective > 0
                       ? std::sqrt(std::max(cell.coverage * (1.0 - cell.coverage), 0.0) /
                                   static_cast<double>(effective))
                       : 0.0;
      table.cells.push_back(cell);
    }
  }
  return table;
}

}  // namespace mdpreg
