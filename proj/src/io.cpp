#include "mdpreg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mdpreg/errors.hpp"

namespace mdpreg {

namespace {

std::string format_with(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string json_number(double v) {
  if (!std::isfinite(v)) return "null";
  return format_with("%.17g", v);
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  out.push_back('"');
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
          out += buf;
        } else {
          out.push_back(ch);
        }
    }
  }
  out.push_back('"');
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += "\"";
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

}  // namespace

std::string format_full(double v) {
  if (std::isnan(v)) return "nan";
  return format_with("%.17g", v);
}

std::string format_short(double v) {
  if (std::isnan(v)) return "nan";
  return format_with("%.4g", v);
}

Dataset parse_dataset_csv(const std::string& text, const LoadConfig& config,
                          const std::string& origin) {
  if (config.response.empty()) {
    throw input_error(origin + ": no response column configured");
  }

  std::string_view body(text);
  if (body.substr(0, 3) == "\xEF\xBB\xBF") body.remove_prefix(3);

  // Split into lines; tolerate one trailing newline.
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == '\n') {
      std::string_view line = body.substr(start, i - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      start = i + 1;
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < 2) {
    throw input_error(origin + ": need a header row and at least one data row");
  }

  // Header.
  std::vector<std::string> header;
  for (std::string_view f : split_fields(lines[0])) {
    std::string name(trim(f));
    if (name.empty()) {
      throw input_error(origin + ": line 1: empty column name in header");
    }
    if (std::find(header.begin(), header.end(), name) != header.end()) {
      throw input_error(origin + ": line 1: duplicate column name '" + name + "'");
    }
    header.push_back(std::move(name));
  }

  const auto col_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw input_error(origin + ": column '" + name + "' not found in header");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t y_col = col_index(config.response);
  std::vector<std::size_t> x_cols;
  if (config.covariates.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j != y_col) x_cols.push_back(j);
    }
  } else {
    for (const std::string& name : config.covariates) {
      const std::size_t j = col_index(name);
      if (j == y_col) {
        throw input_error(origin + ": column '" + name +
                          "' is both the response and a covariate");
      }
      if (std::find(x_cols.begin(), x_cols.end(), j) != x_cols.end()) {
        throw input_error(origin + ": covariate '" + name + "' listed twice");
      }
      x_cols.push_back(j);
    }
  }
  if (x_cols.empty()) {
    throw input_error(origin + ": no covariate columns selected");
  }

  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  const Eigen::Index base = config.add_intercept ? 1 : 0;
  Dataset data;
  data.has_intercept = config.add_intercept;
  data.y.resize(n);
  data.X.resize(n, base + static_cast<Eigen::Index>(x_cols.size()));
  if (config.add_intercept) {
    data.X.col(0).setOnes();
    data.column_names.push_back("(Intercept)");
  }
  for (std::size_t j : x_cols) data.column_names.push_back(header[j]);

  const auto parse_cell = [&](std::string_view raw, std::size_t line_no,
                              std::size_t col) {
    const std::string_view cell = trim(raw);
    const std::string where =
        origin + ": line " + std::to_string(line_no) + ", column '" + header[col] + "'";
    if (cell.empty()) {
      throw input_error(where + ": empty cell");
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw input_error(where + ": cannot parse '" + std::string(cell) + "' as a number");
    }
    if (!std::isfinite(value)) {
      throw input_error(where + ": non-finite value");
    }
    return value;
  };

  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 2;
    const std::vector<std::string_view> fields = lines[static_cast<std::size_t>(r) + 1].empty()
        ? std::vector<std::string_view>{}
        : split_fields(lines[static_cast<std::size_t>(r) + 1]);
    if (fields.size() != header.size()) {
      throw input_error(origin + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(header.size()));
    }
    data.y[r] = parse_cell(fields[y_col], line_no, y_col);
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      data.X(r, base + static_cast<Eigen::Index>(j)) =
          parse_cell(fields[x_cols[j]], line_no, x_cols[j]);
    }
  }

  data.validate();
  return data;
}

Dataset load_dataset(const std::string& path, const LoadConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw input_error("cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset_csv(buffer.str(), config, path);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw input_error("cannot open '" + path + "' for writing");
  }
  out << content;
  if (!out) {
    throw input_error("failed writing '" + path + "'");
  }
}

std::string fit_to_json(const FitResult& fit, const std::string& model_label) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"model\": " << json_escape(model_label) << ",\n";
  os << "  \"n\": " << fit.n_obs << ",\n";
  os << "  \"level\": " << json_number(fit.level) << ",\n";
  if (fit.alpha_summary.fixed_alpha) {
    os << "  \"alpha\": {\"kind\": \"fixed\", \"value\": "
       << json_number(*fit.alpha_summary.fixed_alpha) << "},\n";
  } else if (fit.alpha_summary.posterior) {
    os << "  \"alpha\": {\"kind\": \"posterior\", \"mean\": "
       << json_number(fit.alpha_summary.posterior->mean()) << "},\n";
  } else {
    os << "  \"alpha\": null,\n";
  }
  os << "  \"gic2\": " << json_number(fit.gic2) << ",\n";
  os << "  \"gram_condition\": " << json_number(fit.gram_condition) << ",\n";
  os << "  \"coefficients\": [\n";
  for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
    const std::string name = k < static_cast<Eigen::Index>(fit.column_names.size())
                                 ? fit.column_names[static_cast<std::size_t>(k)]
                                 : "b" + std::to_string(k);
    os << "    {\"name\": " << json_escape(name)
       << ", \"estimate\": " << json_number(fit.beta[k])
       << ", \"psd\": " << json_number(fit.psd[k])
       << ", \"effect_size\": " << json_number(fit.effect_sizes[k])
       << ", \"lower\": " << json_number(fit.interval_lower[k])
       << ", \"upper\": " << json_number(fit.interval_upper[k])
       << ", \"significant\": "
       << (fit.significant[static_cast<std::size_t>(k)] ? "true" : "false") << "}"
       << (k + 1 < fit.beta.size() ? "," : "") << "\n";
  }
  os << "  ],\n";
  os << "  \"cov\": [";
  for (Eigen::Index i = 0; i < fit.cov.rows(); ++i) {
    os << (i == 0 ? "" : ", ") << "[";
    for (Eigen::Index j = 0; j < fit.cov.cols(); ++j) {
      os << (j == 0 ? "" : ", ") << json_number(fit.cov(i, j));
    }
    os << "]";
  }
  os << "]\n";
  os << "}\n";
  return os.str();
}

std::string fit_to_csv(const FitResult& fit) {
  std::ostringstream os;
  os << "coefficient,estimate,psd,effect_size,lower,upper,significant\n";
  for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
    const std::string name = k < static_cast<Eigen::Index>(fit.column_names.size())
                                 ? fit.column_names[static_cast<std::size_t>(k)]
                                 : "b" + std::to_string(k);
    os << csv_field(name) << ',' << format_short(fit.beta[k]) << ','
       << format_short(fit.psd[k]) << ',' << format_short(fit.effect_sizes[k]) << ','
       << format_short(fit.interval_lower[k]) << ','
       << format_short(fit.interval_upper[k]) << ','
       << (fit.significant[static_cast<std::size_t>(k)] ? 1 : 0) << "\n";
  }
  return os.str();
}

std::string posterior_to_json(const AlphaPosterior& posterior) {
  std::ostringstream os;
  os << "{\n  \"mean\": " << json_number(posterior.mean()) << ",\n  \"grid\": [";
  for (Eigen::Index i = 0; i < posterior.grid.values.size(); ++i) {
    os << (i == 0 ? "" : ", ") << json_number(posterior.grid.values[i]);
  }
  os << "],\n  \"weights\": [";
  for (Eigen::Index i = 0; i < posterior.weights.size(); ++i) {
    os << (i == 0 ? "" : ", ") << json_number(posterior.weights[i]);
  }
  os << "]\n}\n";
  return os.str();
}

std::string transform_to_json(const TransformRecord& record,
                              const std::vector<std::string>& column_names) {
  std::ostringstream os;
  os << "{\n  \"mode\": "
     << (record.mode == StandardizeMode::center ? "\"center\"" : "\"zscore\"")
     << ",\n  \"response\": {\"transformed\": "
     << (record.response_transformed ? "true" : "false")
     << ", \"shift\": " << json_number(record.y_shift)
     << ", \"scale\": " << json_number(record.y_scale) << "},\n  \"columns\": [\n";
  for (Eigen::Index j = 0; j < record.shift.size(); ++j) {
    const std::string name = j < static_cast<Eigen::Index>(column_names.size())
                                 ? column_names[static_cast<std::size_t>(j)]
                                 : "c" + std::to_string(j);
    os << "    {\"name\": " << json_escape(name)
       << ", \"shift\": " << json_number(record.shift[j])
       << ", \"scale\": " << json_number(record.scale[j]) << "}"
       << (j + 1 < record.shift.size() ? "," : "") << "\n";
  }
  os << "  ]\n}\n";
  return os.str();
}

std::string voe_to_csv(const std::vector<VoECell>& cells,
                       const std::vector<std::string>& column_names) {
  std::ostringstream os;
  os << "alpha,subset,n_covariates,beta_t,psd_t,effect_size,gic2\n";
  for (const VoECell& cell : cells) {
    std::string subset;
    for (std::size_t i = 0; i < cell.subset.size(); ++i) {
      if (i > 0) subset += '+';
      const int j = cell.subset[i];
      subset += (j >= 0 && j < static_cast<int>(column_names.size()))
                    ? column_names[static_cast<std::size_t>(j)]
                    : "c" + std::to_string(j);
    }
    os << format_full(cell.alpha) << ',' << csv_field(subset) << ','
       << cell.subset.size() << ',' << format_full(cell.beta_T) << ','
       << format_full(cell.psd_T) << ',' << format_full(cell.effect_size) << ','
       << format_full(cell.gic2) << "\n";
  }
  return os.str();
}

std::string sensitivity_to_csv(const std::vector<SensitivityDraw>& draws) {
  std::ostringstream os;
  os << "draw,gamma,mu1,mu0,beta_t_adjusted,es_adjusted,lambda\n";
  for (std::size_t d = 0; d < draws.size(); ++d) {
    const SensitivityDraw& s = draws[d];
    std::string lambda;
    for (Eigen::Index j = 0; j < s.lambda.size(); ++j) {
      if (j > 0) lambda += ';';
      lambda += format_full(s.lambda[j]);
    }
    os << d << ',' << format_full(s.gamma) << ',' << format_full(s.mu1) << ','
       << format_full(s.mu0) << ',' << format_full(s.beta_T_adjusted) << ','
       << format_full(s.es_adjusted) << ',' << csv_field(lambda) << "\n";
  }
  return os.str();
}

std::string coverage_to_csv(const CoverageTable& table) {
  std::ostringstream os;
  os << "dist,a_h,n,model,reps,failures,coverage,mc_se\n";
  for (const SimCellResult& cell : table.cells) {
    os << to_string(cell.config.covariate_dist) << ','
       << format_full(cell.config.a_h) << ',' << cell.config.n << ','
       << to_string(cell.model) << ',' << cell.reps << ',' << cell.failures << ','
       << format_full(cell.coverage) << ',' << format_full(cell.mc_se) << "\n";
  }
  return os.str();
}

std::string bootstrap_to_csv(const BootstrapSample& sample,
                             const std::vector<std::string>& column_names) {
  std::ostringstream os;
  os << "replicate,alpha";
  for (Eigen::Index k = 0; k < sample.betas.cols(); ++k) {
    const std::string name = k < static_cast<Eigen::Index>(column_names.size())
                                 ? column_names[static_cast<std::size_t>(k)]
                                 : "b" + std::to_string(k);
    os << ',' << csv_field("beta_" + name);
  }
  os << "\n";
  for (Eigen::Index b = 0; b < sample.betas.rows(); ++b) {
    os << b << ',' << format_full(sample.alphas[b]);
    for (Eigen::Index k = 0; k < sample.betas.cols(); ++k) {
      os << ',' << format_full(sample.betas(b, k));
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace mdpreg
