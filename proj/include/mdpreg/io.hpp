#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdpreg/bootstrap.hpp"
#include "mdpreg/dataset.hpp"
#include "mdpreg/estimator.hpp"
#include "mdpreg/simulate.hpp"
#include "mdpreg/voe.hpp"

namespace mdpreg {

struct LoadConfig {
  std::string response;
  // Empty: every non-response column, in file order.
  std::vector<std::string> covariates;
  bool add_intercept = true;
};

// Strict CSV reader: comma separated, one header row, numeric cells parsed
// with std::from_chars. Errors carry the line number and column name of the
// offending cell. Rejects ragged rows, duplicate or missing headers, empty
// and non-finite cells.
Dataset load_dataset(const std::string& path, const LoadConfig& config);
Dataset parse_dataset_csv(const std::string& text, const LoadConfig& config,
                          const std::string& origin);

// Number formatting used by every writer: round-trip precision (17
// significant digits) for machine output, 4 significant digits for the
// human-readable table.
std::string format_full(double v);
std::string format_short(double v);

// Deterministic writers (no timestamps, fixed field order, '\n' endings).
std::string fit_to_json(const FitResult& fit, const std::string& model_label);
std::string fit_to_csv(const FitResult& fit);
std::string posterior_to_json(const AlphaPosterior& posterior);
std::string transform_to_json(const TransformRecord& record,
                              const std::vector<std::string>& column_names);
std::string voe_to_csv(const std::vector<VoECell>& cells,
                       const std::vector<std::string>& column_names);
std::string sensitivity_to_csv(const std::vector<SensitivityDraw>& draws);
std::string coverage_to_csv(const CoverageTable& table);
std::string bootstrap_to_csv(const BootstrapSample& sample,
                             const std::vector<std::string>& column_names);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mdpreg
