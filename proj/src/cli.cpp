#include "mdpreg/cli.hpp"

#include <CLI11.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mdpreg/alpha.hpp"
#include "mdpreg/bootstrap.hpp"
#include "mdpreg/dataset.hpp"
#include "mdpreg/errors.hpp"
#include "mdpreg/estimator.hpp"
#include "mdpreg/io.hpp"
#include "mdpreg/rng.hpp"
#include "mdpreg/simulate.hpp"
#include "mdpreg/voe.hpp"
#include "mdpreg/weights.hpp"

namespace mdpreg {

namespace {

struct CommonOpts {
  std::string input;
  std::string response;
  std::vector<std::string> covariates;
  bool no_intercept = false;
  std::string standardize = "none";
  bool standardize_response = false;
  std::string out = ".";
};

struct MdpOpts {
  std::string prior = "uniform";
  double xi = 3.0;
  double alpha = 0.0;  // > 0 fixes the concentration
  double grid_step = 0.005;
  std::string mass_mode = "per_row";
  double level = 0.95;
};

void add_common(CLI::App* cmd, CommonOpts& o, const std::string& default_standardize) {
  cmd->add_option("--input", o.input, "input CSV file")->required();
  cmd->add_option("--response", o.response, "response column name")->required();
  cmd->add_option("--covariates", o.covariates,
                  "covariate column names (default: all other columns)")
      ->delimiter(',');
  cmd->add_flag("--no-intercept", o.no_intercept, "omit the intercept column");
  o.standardize = default_standardize;
  cmd->add_option("--standardize", o.standardize, "none|center|zscore")
      ->check(CLI::IsMember({"none", "center", "zscore"}))
      ->capture_default_str();
  cmd->add_flag("--standardize-response", o.standardize_response,
                "also transform the response");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
}

void add_mdp(CLI::App* cmd, MdpOpts& o) {
  cmd->add_option("--prior", o.prior, "concentration prior: uniform|cauchy")
      ->check(CLI::IsMember({"uniform", "cauchy"}))
      ->capture_default_str();
  cmd->add_option("--xi", o.xi, "prior upper bound")->capture_default_str();
  cmd->add_option("--alpha", o.alpha,
                  "fix the concentration instead of using its posterior");
  cmd->add_option("--grid-step", o.grid_step, "concentration grid spacing")
      ->capture_default_str();
  cmd->add_option("--mass-mode", o.mass_mode,
                  "imaginary-row mass rule: per_row|normalized")
      ->check(CLI::IsMember({"per_row", "normalized"}))
      ->capture_default_str();
  cmd->add_option("--level", o.level, "interval level")->capture_default_str();
}

AlphaPrior make_prior(const MdpOpts& o) {
  return o.prior == "uniform" ? AlphaPrior::uniform(o.xi)
                              : AlphaPrior::truncated_cauchy(o.xi);
}

ImaginaryMassMode make_mass_mode(const MdpOpts& o) {
  return o.mass_mode == "per_row" ? ImaginaryMassMode::per_row
                                : ImaginaryMassMode::normalized;
}

FitOptions make_fit_options(const MdpOpts& o) {
  FitOptions opts;
  opts.prior = make_prior(o);
  if (o.alpha > 0.0) opts.fixed_alpha = o.alpha;
  opts.mass_mode = make_mass_mode(o);
  opts.grid_step = o.grid_step;
  opts.level = o.level;
  return opts;
}

struct LoadedData {
  Dataset data;
  std::optional<TransformRecord> transform;
};

LoadedData load_common(const CommonOpts& o) {
  LoadConfig lc;
  lc.response = o.response;
  lc.covariates = o.covariates;
  lc.add_intercept = !o.no_intercept;
  LoadedData out{load_dataset(o.input, lc), std::nullopt};
  if (o.standardize != "none") {
    const StandardizeMode mode = o.standardize == "center" ? StandardizeMode::center
                                                           : StandardizeMode::zscore;
    auto [d, rec] = standardize(out.data, mode, o.standardize_response);
    out.data = std::move(d);
    out.transform = std::move(rec);
  } else if (o.standardize_response) {
    throw input_error("--standardize-response requires --standardize center or zscore");
  }
  return out;
}

std::filesystem::path prepare_out_dir(const std::string& out) {
  std::filesystem::path dir(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw input_error("cannot create output directory '" + out + "': " + ec.message());
  }
  return dir;
}

int find_treatment(const Dataset& data, const std::string& name) {
  const auto it =
      std::find(data.column_names.begin(), data.column_names.end(), name);
  if (it == data.column_names.end()) {
    throw input_error("treatment column '" + name + "' is not among the covariates");
  }
  return static_cast<int>(it - data.column_names.begin());
}

void write_transform_if_any(const LoadedData& loaded,
                            const std::filesystem::path& dir) {
  if (loaded.transform) {
    write_text_file((dir / "transform.json").string(),
                    transform_to_json(*loaded.transform, loaded.data.column_names));
  }
}

// ---------------------------------------------------------------- fit ----

struct FitCmd {
  CommonOpts common;
  MdpOpts mdp;
  std::string model = "mdp";
  bool dump_alpha_posterior = false;

  void run() const {
    LoadedData loaded = load_common(common);
    FitResult fit;
    if (model == "hc0") {
      fit = fit_hc0(loaded.data, mdp.level);
    } else {
      fit = fit_mdp(loaded.data, make_fit_options(mdp));
    }
    const auto dir = prepare_out_dir(common.out);
    write_text_file((dir / "fit.json").string(), fit_to_json(fit, model));
    write_text_file((dir / "fit.csv").string(), fit_to_csv(fit));
    write_transform_if_any(loaded, dir);
    if (dump_alpha_posterior) {
      if (!fit.alpha_summary.posterior) {
        throw input_error(
            "--dump-alpha-posterior requires a posterior fit (omit --alpha, use --model mdp)");
      }
      write_text_file((dir / "alpha_posterior.json").string(),
                      posterior_to_json(*fit.alpha_summary.posterior));
    }
    std::cout << fit_to_csv(fit);
  }
};

// ---------------------------------------------------------------- voe ----

struct VoeCmd {
  CommonOpts common;
  MdpOpts mdp;
  std::string treatment;

  void run() const {
    LoadedData loaded = load_common(common);
    const int t = find_treatment(loaded.data, treatment);
    VoEOptions options;
    options.grid_step = mdp.grid_step;
    options.mass_mode = make_mass_mode(mdp);
    options.level = mdp.level;
    const std::vector<VoECell> cells =
        voe_analysis(loaded.data, t, make_prior(mdp), options);
    const auto dir = prepare_out_dir(common.out);
    write_text_file((dir / "voe.csv").string(),
                    voe_to_csv(cells, loaded.data.column_names));
    write_transform_if_any(loaded, dir);
    std::cout << "voe cells: " << cells.size() << "\n";
    if (!cells.empty()) {
      const auto [mn, mx] = std::minmax_element(
          cells.begin(), cells.end(), [](const VoECell& a, const VoECell& b) {
            return a.effect_size < b.effect_size;
          });
      std::cout << "effect size range: [" << format_short(mn->effect_size) << ", "
                << format_short(mx->effect_size) << "]\n";
    }
  }
};

// -------------------------------------------------------- sensitivity ----

struct SensitivityCmd {
  CommonOpts common;
  MdpOpts mdp;
  std::string treatment;
  int draws = 50;
  std::uint64_t seed = 1;

  void run() const {
    LoadedData loaded = load_common(common);
    const int t = find_treatment(loaded.data, treatment);
    const FitResult fit = fit_mdp(loaded.data, make_fit_options(mdp));
    const std::vector<SensitivityDraw> result =
        sensitivity_analysis(fit, loaded.data, t, draws, seed);
    const auto dir = prepare_out_dir(common.out);
    write_text_file((dir / "sensitivity.csv").string(), sensitivity_to_csv(result));
    write_transform_if_any(loaded, dir);

    std::vector<double> es;
    es.reserve(result.size());
    for (const auto& d : result) es.push_back(d.es_adjusted);
    std::sort(es.begin(), es.end());
    std::cout << "sensitivity draws: " << result.size() << "\n"
              << "unadjusted effect size: " << format_short(fit.effect_sizes[t]) << "\n"
              << "adjusted effect size range: [" << format_short(es.front()) << ", "
              << format_short(es.back()) << "]\n";
  }
};

// ----------------------------------------------------- bootstrap-check ----

struct BootstrapCheckCmd {
  CommonOpts common;
  MdpOpts mdp;
  long B = 1000;
  std::uint64_t seed = 1;
  double max_se_units = 5.0;
  bool dump_draws = false;

  BootstrapCheckCmd() { mdp.alpha = 1.0; mdp.mass_mode = "normalized"; }

  void run() const {
    if (!(mdp.alpha > 0.0)) {
      throw input_error("bootstrap-check requires a fixed --alpha > 0");
    }
    LoadedData loaded = load_common(common);
    const ClusteredData cd = cluster_rows(loaded.data);
    const AugmentedDesign design =
        augment_ridge(cd,
                      RidgeBaseline::unit_ridge(loaded.data.K(),
                                                loaded.data.has_intercept ? 0 : -1),
                      make_mass_mode(mdp));
    const WeightMoments moments = conditional_moments(design, mdp.alpha);

    // Empirical weight moments over B sampler draws.
    const Eigen::Index m = design.rows();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(m, m);
    for (long b = 0; b < B; ++b) {
      std::mt19937_64 rng = substream(seed, static_cast<std::uint64_t>(b));
      const Eigen::VectorXd w = sample_weights(design, mdp.alpha, rng);
      mean += w;
      second.noalias() += w * w.transpose();
    }
    mean /= static_cast<double>(B);
    second /= static_cast<double>(B);
    const Eigen::MatrixXd cov =
        (second - mean * mean.transpose()) * (static_cast<double>(B) / (B - 1.0));

    double max_z = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double se = std::sqrt(std::max(moments.cov(j, j), 1e-300) /
                                  static_cast<double>(B));
      max_z = std::max(max_z, std::abs(mean[j] - moments.mean[j]) / se);
    }
    double max_cov_rel = 0.0;
    const double cov_scale = moments.cov.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        max_cov_rel = std::max(
            max_cov_rel, std::abs(cov(i, j) - moments.cov(i, j)) / cov_scale);
      }
    }

    std::cout << "draws: " << B << "\n"
              << "max |mean - expected| in se units: " << format_short(max_z) << "\n"
              << "max |cov - expected| relative to the largest entry: "
              << format_short(max_cov_rel) << "\n";

    if (dump_draws) {
      const BootstrapSample sample = bootstrap_functional(design, mdp.alpha, B, seed);
      const auto dir = prepare_out_dir(common.out);
      write_text_file((dir / "bootstrap.csv").string(),
                      bootstrap_to_csv(sample, loaded.data.column_names));
      std::cout << "rejected replicates: " << sample.rejected << "\n";
    }

    if (max_z > max_se_units) {
      throw numeric_error("sampler mean deviates from the moment formula by " +
                          format_short(max_z) + " se units (limit " +
                          format_short(max_se_units) + ")");
    }
  }
};

// ----------------------------------------------------------- simulate ----

struct SimulateCmd {
  std::vector<std::string> cells;
  std::vector<std::string> models{"mdp_uniform", "mdp_cauchy", "hc0"};
  long reps = 2000;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out = ".";

  static SimConfig parse_cell(const std::string& text) {
    // Format: dist:a_h:n, e.g. uniform01:0:100.
    SimConfig config;
    const auto p1 = text.find(':');
    const auto p2 = text.find(':', p1 == std::string::npos ? p1 : p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos) {
      throw input_error("--cell expects dist:a_h:n, got '" + text + "'");
    }
    const std::string dist = text.substr(0, p1);
    if (dist == "uniform01") config.covariate_dist = CovariateDist::uniform01;
    else if (dist == "exponential1") config.covariate_dist = CovariateDist::exponential1;
    else if (dist == "normal25") config.covariate_dist = CovariateDist::normal25;
    else if (dist == "ar1_student") config.covariate_dist = CovariateDist::ar1_student;
    else throw input_error("unknown covariate distribution '" + dist + "'");
    try {
      config.a_h = std::stod(text.substr(p1 + 1, p2 - p1 - 1));
      config.n = std::stol(text.substr(p2 + 1));
    } catch (const std::exception&) {
      throw input_error("--cell expects numeric a_h and n, got '" + text + "'");
    }
    return config;
  }

  static SimModel parse_model(const std::string& name) {
    if (name == "mdp_uniform") return SimModel::mdp_uniform;
    if (name == "mdp_cauchy") return SimModel::mdp_cauchy;
    if (name == "hc0") return SimModel::hc0;
    if (name == "oracle_unbounded") return SimModel::oracle_unbounded;
    throw input_error("unknown model '" + name + "'");
  }

  void run() const {
    if (cells.empty()) {
      throw input_error("simulate requires at least one --cell dist:a_h:n");
    }
    std::vector<SimConfig> configs;
    configs.reserve(cells.size());
    for (const std::string& c : cells) configs.push_back(parse_cell(c));
    std::vector<SimModel> model_list;
    model_list.reserve(models.size());
    for (const std::string& m : models) model_list.push_back(parse_model(m));

    const CoverageTable table = coverage_study(configs, model_list, reps, seed, threads);
    const auto dir = prepare_out_dir(out);
    write_text_file((dir / "simulate.csv").string(), coverage_to_csv(table));
    for (const SimCellResult& cell : table.cells) {
      std::cout << to_string(cell.config.covariate_dist) << " a_h="
                << format_short(cell.config.a_h) << " n=" << cell.config.n << " "
                << to_string(cell.model) << ": coverage "
                << format_short(cell.coverage) << " (mc se "
                << format_short(cell.mc_se) << ", failures " << cell.failures
                << ")\n";
    }
  }
};

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Bayesian regression with heteroscedasticity-consistent posterior "
               "dispersion via Dirichlet-process mixing"};
  app.require_subcommand(1);

  FitCmd fit_cmd;
  CLI::App* fit = app.add_subcommand("fit", "fit one model and write summaries");
  add_common(fit, fit_cmd.common, "none");
  add_mdp(fit, fit_cmd.mdp);
  fit->add_option("--model", fit_cmd.model, "mdp|hc0")
      ->check(CLI::IsMember({"mdp", "hc0"}))
      ->capture_default_str();
  fit->add_flag("--dump-alpha-posterior", fit_cmd.dump_alpha_posterior,
                "also write the concentration posterior");
  fit->callback([&fit_cmd] { fit_cmd.run(); });

  VoeCmd voe_cmd;
  CLI::App* voe = app.add_subcommand(
      "voe", "vibration of effects across concentration and covariate subsets");
  add_common(voe, voe_cmd.common, "zscore");
  add_mdp(voe, voe_cmd.mdp);
  voe->add_option("--treatment", voe_cmd.treatment, "treatment column name")
      ->required();
  voe->callback([&voe_cmd] { voe_cmd.run(); });

  SensitivityCmd sens_cmd;
  CLI::App* sens = app.add_subcommand(
      "sensitivity", "hidden-confounder adjustment draws for one treatment");
  add_common(sens, sens_cmd.common, "zscore");
  add_mdp(sens, sens_cmd.mdp);
  sens->add_option("--treatment", sens_cmd.treatment, "treatment column name")
      ->required();
  sens->add_option("--draws", sens_cmd.draws, "number of draws")
      ->capture_default_str();
  sens->add_option("--seed", sens_cmd.seed, "rng seed")->capture_default_str();
  sens->callback([&sens_cmd] { sens_cmd.run(); });

  BootstrapCheckCmd boot_cmd;
  CLI::App* boot = app.add_subcommand(
      "bootstrap-check", "validate the weight sampler against its moment formulas");
  add_common(boot, boot_cmd.common, "none");
  add_mdp(boot, boot_cmd.mdp);
  boot->add_option("-B,--draws", boot_cmd.B, "number of sampler draws")
      ->capture_default_str();
  boot->add_option("--seed", boot_cmd.seed, "rng seed")->capture_default_str();
  boot->add_option("--max-se-units", boot_cmd.max_se_units,
                   "fail when the mean deviates by more se units")
      ->capture_default_str();
  boot->add_flag("--dump-draws", boot_cmd.dump_draws,
                 "also write functional draws to bootstrap.csv");
  boot->callback([&boot_cmd] { boot_cmd.run(); });

  SimulateCmd sim_cmd;
  CLI::App* sim = app.add_subcommand("simulate", "interval coverage study");
  sim->add_option("--cell", sim_cmd.cells, "cell layout dist:a_h:n (repeatable)")
      ->required();
  sim->add_option("--models", sim_cmd.models,
                  "mdp_uniform|mdp_cauchy|hc0|oracle_unbounded")
      ->delimiter(',')
      ->capture_default_str();
  sim->add_option("--reps", sim_cmd.reps, "replicates per cell")
      ->capture_default_str();
  sim->add_option("--seed", sim_cmd.seed, "rng seed")->capture_default_str();
  sim->add_option("--threads", sim_cmd.threads,
                  "worker threads (0: MDPREG_THREADS or hardware)")
      ->capture_default_str();
  sim->add_option("--out", sim_cmd.out, "output directory")->capture_default_str();
  sim->callback([&sim_cmd] { sim_cmd.run(); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace mdpreg
