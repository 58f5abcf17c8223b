#pragma once

// CSV dataset ingestion and report/plot-data emission.
//
// Floating-point output uses 17 significant digits so every value
// round-trips exactly. Files are written to a temporary name and renamed.

#include "isamp/harness.hpp"
#include "isamp/sampler.hpp"
#include "isamp/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace isamp {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class WeightKind { weight, inclusion_prob };

struct DatasetSpec {
  std::string path;
  std::string response_column;
  std::string weight_column;
  WeightKind weight_kind = WeightKind::weight;
  std::vector<std::string> y_covariates;
  std::vector<std::string> pi_covariates;
  std::optional<std::string> spline_column;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> log_columns;  // natural log applied before modeling
  bool categorical_in_y = true;
  bool categorical_in_pi = true;
};

struct LoadedDataset {
  Dataset observations;
  std::vector<double> pi;                // inclusion probabilities as released (1 / w or w)
  std::vector<double> spline_x;          // raw values of the spline column, if any
  std::vector<std::string> y_names;      // labels of x_y entries
  std::vector<std::string> pi_names;     // labels of x_pi entries
  std::size_t dropped_missing = 0;
  std::size_t dropped_weight = 0;
};

/// "%.17g" formatting.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      field.push_back(c);
    } else if (c == ',' && !quoted) {
      fields.push_back(trim(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(trim(field));
  return fields;
}

inline bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == ".";
}

inline std::optional<double> parse_number(const std::string& s) {
  if (is_missing(s)) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Reads a header-first comma-separated file. Rows with a missing or
/// non-numeric required field are dropped; rows with a non-positive weight
/// are dropped separately. With weight_kind = weight, pi = 1 / w.
inline LoadedDataset load_dataset(const DatasetSpec& spec) {
  std::ifstream in(spec.path);
  if (!in) throw IoError("load_dataset: cannot open " + spec.path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("load_dataset: empty file " + spec.path);
  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  const auto index_of = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) throw IoError("load_dataset: column not found: " + name);
    return it->second;
  };
  const std::set<std::string> log_cols(spec.log_columns.begin(), spec.log_columns.end());

  const std::size_t y_col = index_of(spec.response_column);
  const std::size_t w_col = index_of(spec.weight_column);
  std::vector<std::size_t> y_cov, pi_cov, cat_cols;
  for (const auto& c : spec.y_covariates) y_cov.push_back(index_of(c));
  for (const auto& c : spec.pi_covariates) pi_cov.push_back(index_of(c));
  for (const auto& c : spec.categorical_columns) cat_cols.push_back(index_of(c));
  std::optional<std::size_t> spline_col;
  if (spec.spline_column) spline_col = index_of(*spec.spline_column);

  struct Row {
    double y = 0.0;
    double log_pi = 0.0;
    double pi = 0.0;
    std::vector<double> y_cov;
    std::vector<double> pi_cov;
    std::vector<std::string> levels;
    double spline_x = 0.0;
  };
  std::vector<Row> rows;
  LoadedDataset out;

  const auto numeric = [&](const std::vector<std::string>& f, std::size_t idx,
                           const std::string& name) -> std::optional<double> {
    if (idx >= f.size()) return std::nullopt;
    auto v = detail::parse_number(f[idx]);
    if (v && log_cols.count(name) > 0) {
      if (*v <= 0.0) return std::nullopt;
      v = std::log(*v);
    }
    return v;
  };

  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    Row row;
    bool ok = true;
    const auto y = numeric(f, y_col, spec.response_column);
    const auto w = w_col < f.size() ? detail::parse_number(f[w_col]) : std::nullopt;
    ok = y.has_value() && w.has_value();
    for (std::size_t j = 0; ok && j < y_cov.size(); ++j) {
      const auto v = numeric(f, y_cov[j], spec.y_covariates[j]);
      ok = v.has_value();
      if (ok) row.y_cov.push_back(*v);
    }
    for (std::size_t j = 0; ok && j < pi_cov.size(); ++j) {
      const auto v = numeric(f, pi_cov[j], spec.pi_covariates[j]);
      ok = v.has_value();
      if (ok) row.pi_cov.push_back(*v);
    }
    for (std::size_t j = 0; ok && j < cat_cols.size(); ++j) {
      ok = cat_cols[j] < f.size() && !detail::is_missing(f[cat_cols[j]]);
      if (ok) row.levels.push_back(f[cat_cols[j]]);
    }
    if (ok && spline_col) {
      const auto v = numeric(f, *spline_col, *spec.spline_column);
      ok = v.has_value();
      if (ok) row.spline_x = *v;
    }
    if (!ok) {
      ++out.dropped_missing;
      continue;
    }
    if (*w <= 0.0) {
      ++out.dropped_weight;
      continue;
    }
    row.y = *y;
    row.pi = spec.weight_kind == WeightKind::weight ? 1.0 / *w : *w;
    row.log_pi = spec.weight_kind == WeightKind::weight ? -std::log(*w) : std::log(*w);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("load_dataset: no usable rows in " + spec.path);

  // Reference coding: levels sorted, the first one is the reference.
  std::vector<std::vector<std::string>> levels(cat_cols.size());
  for (std::size_t j = 0; j < cat_cols.size(); ++j) {
    std::set<std::string> seen;
    for (const auto& r : rows) seen.insert(r.levels[j]);
    levels[j].assign(seen.begin(), seen.end());
  }
  std::vector<std::string> dummy_names;
  for (std::size_t j = 0; j < cat_cols.size(); ++j) {
    for (std::size_t l = 1; l < levels[j].size(); ++l) {
      dummy_names.push_back(spec.categorical_columns[j] + "=" + levels[j][l]);
    }
  }

  out.y_names.push_back("(Intercept)");
  for (const auto& c : spec.y_covariates) out.y_names.push_back(c);
  if (spec.categorical_in_y) out.y_names.insert(out.y_names.end(), dummy_names.begin(), dummy_names.end());
  out.pi_names.push_back("(Intercept)");
  for (const auto& c : spec.pi_covariates) out.pi_names.push_back(c);
  if (spec.categorical_in_pi) {
    out.pi_names.insert(out.pi_names.end(), dummy_names.begin(), dummy_names.end());
  }

  for (const auto& r : rows) {
    std::vector<double> dummies;
    for (std::size_t j = 0; j < cat_cols.size(); ++j) {
      for (std::size_t l = 1; l < levels[j].size(); ++l) {
        dummies.push_back(r.levels[j] == levels[j][l] ? 1.0 : 0.0);
      }
    }
    Observation obs;
    obs.y = r.y;
    obs.log_pi = r.log_pi;
    std::vector<double> xy{1.0};
    xy.insert(xy.end(), r.y_cov.begin(), r.y_cov.end());
    if (spec.categorical_in_y) xy.insert(xy.end(), dummies.begin(), dummies.end());
    std::vector<double> xp{1.0};
    xp.insert(xp.end(), r.pi_cov.begin(), r.pi_cov.end());
    if (spec.categorical_in_pi) xp.insert(xp.end(), dummies.begin(), dummies.end());
    obs.x_y = Eigen::Map<const Vector>(xy.data(), static_cast<Eigen::Index>(xy.size()));
    obs.x_pi = Eigen::Map<const Vector>(xp.data(), static_cast<Eigen::Index>(xp.size()));
    out.observations.push_back(std::move(obs));
    out.pi.push_back(r.pi);
    out.spline_x.push_back(r.spline_x);
  }
  if (!spec.spline_column) out.spline_x.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Writing

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

/// Builds a CSV document from a header and rows of preformatted cells.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) { row(header); }

  CsvWriter& row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    return *this;
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

inline std::string metrics_csv(const MetricsTable& t) {
  CsvWriter csv({"method", "bias", "mse", "coverage_95", "avg_ci_length"});
  for (const auto& m : t.methods) {
    csv.row({std::string(to_string(m.method)), format_double(m.bias), format_double(m.mse),
             format_double(m.coverage_95), format_double(m.avg_ci_length)});
  }
  return csv.str();
}

/// Grid-averaged metrics of a curve study, one row per method.
inline MetricsTable curve_summary_table(const CurveMetrics& c) {
  MetricsTable t;
  t.kind = ScenarioKind::nonlinear;
  t.N = c.N;
  t.n = c.n;
  t.M = c.M;
  t.failed = c.failed;
  const auto mean = [](const std::vector<double>& v) {
    CompensatedSum s;
    for (double x : v) s.add(x);
    return s.value() / static_cast<double>(v.size());
  };
  for (const auto& m : c.methods) {
    t.methods.push_back({m.method, mean(m.bias), mean(m.mse), mean(m.coverage),
                         mean(m.avg_ci_length)});
  }
  return t;
}

inline std::string curve_metrics_csv(const CurveMetrics& c, std::size_t method_index) {
  const auto& m = c.methods.at(method_index);
  CsvWriter csv({"x", "truth", "mean_fit", "bias", "mse", "coverage", "avg_ci_length"});
  for (std::size_t g = 0; g < c.grid.size(); ++g) {
    csv.row({format_double(c.grid[g]), format_double(c.truth[g]), format_double(m.mean_fit[g]),
             format_double(m.bias[g]), format_double(m.mse[g]), format_double(m.coverage[g]),
             format_double(m.avg_ci_length[g])});
  }
  return csv.str();
}

inline std::string summary_csv(const Summary& s) {
  CsvWriter csv({"parameter", "mean", "sd", "q2.5", "q97.5", "ci_length", "rhat"});
  for (const auto& p : s.params) {
    csv.row({p.name, format_double(p.mean), format_double(p.sd), format_double(p.q025),
             format_double(p.q975), format_double(p.ci_length),
             std::isnan(p.rhat) ? std::string("NA") : format_double(p.rhat)});
  }
  return csv.str();
}

inline std::string curve_fit_csv(const std::vector<double>& x, const CurveFit& c) {
  CsvWriter csv({"x", "mean", "lo", "hi"});
  for (std::size_t g = 0; g < x.size(); ++g) {
    csv.row({format_double(x[g]), format_double(c.mean[g]), format_double(c.lo[g]),
             format_double(c.hi[g])});
  }
  return csv.str();
}

inline std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  CsvWriter csv({"lo", "hi", "count", "density"});
  for (const auto& b : bins) {
    csv.row({format_double(b.lo), format_double(b.hi), std::to_string(b.count),
             format_double(b.density)});
  }
  return csv.str();
}

inline std::string density_csv(const std::vector<DensityPoint>& pts) {
  CsvWriter csv({"x", "true_density", "fitted_density"});
  for (const auto& p : pts) {
    csv.row({format_double(p.x), format_double(p.true_density), format_double(p.fitted_density)});
  }
  return csv.str();
}

// ---------------------------------------------------------------------------
// JSON (de)serialization of results, used by run metadata and emit-plot-data.

using Json = nlohmann::json;

inline Json to_json(const MetricsTable& t) {
  Json j;
  j["type"] = "metrics";
  j["scenario"] = std::string(to_string(t.kind));
  j["N"] = t.N;
  j["n"] = t.n;
  j["M"] = t.M;
  j["failed"] = t.failed;
  j["truth"] = t.truth;
  for (const auto& m : t.methods) {
    j["methods"].push_back({{"method", std::string(to_string(m.method))},
                            {"bias", m.bias},
                            {"mse", m.mse},
                            {"coverage_95", m.coverage_95},
                            {"avg_ci_length", m.avg_ci_length}});
  }
  return j;
}

inline StudyMethod parse_study_method(std::string_view s) {
  if (s == "full") return StudyMethod::full;
  if (s == "pseudo") return StudyMethod::pseudo;
  if (s == "srs") return StudyMethod::srs;
  throw DomainError("unknown study method: " + std::string(s));
}

inline MetricsTable metrics_from_json(const Json& j) {
  MetricsTable t;
  t.kind = parse_scenario_kind(j.at("scenario").get<std::string>());
  t.N = j.at("N").get<std::size_t>();
  t.n = j.at("n").get<std::size_t>();
  t.M = j.at("M").get<int>();
  t.failed = j.at("failed").get<int>();
  t.truth = j.at("truth").get<double>();
  for (const auto& m : j.at("methods")) {
    t.methods.push_back({parse_study_method(m.at("method").get<std::string>()),
                         m.at("bias").get<double>(), m.at("mse").get<double>(),
                         m.at("coverage_95").get<double>(), m.at("avg_ci_length").get<double>()});
  }
  return t;
}

inline Json to_json(const CurveMetrics& c) {
  Json j;
  j["type"] = "curve";
  j["N"] = c.N;
  j["n"] = c.n;
  j["M"] = c.M;
  j["failed"] = c.failed;
  j["grid"] = c.grid;
  j["truth"] = c.truth;
  for (const auto& m : c.methods) {
    j["methods"].push_back({{"method", std::string(to_string(m.method))},
                            {"mean_fit", m.mean_fit},
                            {"bias", m.bias},
                            {"mse", m.mse},
                            {"coverage", m.coverage},
                            {"avg_ci_length", m.avg_ci_length}});
  }
  return j;
}

inline CurveMetrics curve_from_json(const Json& j) {
  CurveMetrics c;
  c.N = j.at("N").get<std::size_t>();
  c.n = j.at("n").get<std::size_t>();
  c.M = j.at("M").get<int>();
  c.failed = j.at("failed").get<int>();
  c.grid = j.at("grid").get<std::vector<double>>();
  c.truth = j.at("truth").get<std::vector<double>>();
  for (const auto& m : j.at("methods")) {
    CurveMethodMetrics row;
    row.method = parse_study_method(m.at("method").get<std::string>());
    row.mean_fit = m.at("mean_fit").get<std::vector<double>>();
    row.bias = m.at("bias").get<std::vector<double>>();
    row.mse = m.at("mse").get<std::vector<double>>();
    row.coverage = m.at("coverage").get<std::vector<double>>();
    row.avg_ci_length = m.at("avg_ci_length").get<std::vector<double>>();
    c.methods.push_back(std::move(row));
  }
  return c;
}

inline Json to_json(const Summary& s) {
  Json j = Json::array();
  for (const auto& p : s.params) {
    j.push_back({{"name", p.name},
                 {"mean", p.mean},
                 {"sd", p.sd},
                 {"q2.5", p.q025},
                 {"q97.5", p.q975},
                 {"ci_length", p.ci_length},
                 {"rhat", std::isnan(p.rhat) ? Json(nullptr) : Json(p.rhat)}});
  }
  return j;
}

inline Summary summary_from_json(const Json& j) {
  Summary s;
  for (const auto& p : j) {
    ParamSummary ps;
    ps.name = p.at("name").get<std::string>();
    ps.mean = p.at("mean").get<double>();
    ps.sd = p.at("sd").get<double>();
    ps.q025 = p.at("q2.5").get<double>();
    ps.q975 = p.at("q97.5").get<double>();
    ps.ci_length = p.at("ci_length").get<double>();
    if (!p.at("rhat").is_null()) ps.rhat = p.at("rhat").get<double>();
    s.params.push_back(ps);
  }
  return s;
}

/// Output paths produced by write_report.
using ReportFiles = std::vector<std::filesystem::path>;

/// metrics.csv for SLR studies; for curve studies also curve_<method>.csv.
inline ReportFiles write_report(const MetricsTable& t, const std::filesystem::path& dir) {
  ensure_directory(dir);
  const auto path = dir / "metrics.csv";
  write_file_atomic(path, metrics_csv(t));
  return {path};
}

inline ReportFiles write_report(const CurveMetrics& c, const std::filesystem::path& dir) {
  ReportFiles files = write_report(curve_summary_table(c), dir);
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    const auto path = dir / ("curve_" + std::string(to_string(c.methods[i].method)) + ".csv");
    write_file_atomic(path, curve_metrics_csv(c, i));
    files.push_back(path);
  }
  return files;
}

inline ReportFiles write_report(const Summary& s, const std::filesystem::path& dir) {
  ensure_directory(dir);
  const auto path = dir / "summary.csv";
  write_file_atomic(path, summary_csv(s));
  return {path};
}

inline ReportFiles write_report(const WeightDistResult& r, const std::filesystem::path& dir) {
  ReportFiles files = write_report(r.summary, dir);
  files.push_back(dir / "histogram.csv");
  write_file_atomic(files.back(), histogram_csv(r.histogram));
  files.push_back(dir / "density.csv");
  write_file_atomic(files.back(), density_csv(r.density));
  return files;
}

}  // namespace isamp
