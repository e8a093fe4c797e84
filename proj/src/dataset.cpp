#include "softhad/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "softhad/stats.hpp"

namespace softhad {
namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) fields.push_back(field);
  if (!line.empty() && line.back() == delim) fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  try {
    std::size_t pos = 0;
    out = std::stod(t, &pos);
    return pos == t.size();
  } catch (const std::exception&) {
    return false;
  }
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_table(const std::string& path, char delim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("data: cannot open file: " + path);
  RawTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("data: empty file: " + path);
  t.header = split_line(line, delim);
  for (auto& h : t.header) h = trim(h);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_line(line, delim);
    if (fields.size() != t.header.size())
      throw std::runtime_error("data: row " + std::to_string(lineno) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (t.rows.empty()) throw std::runtime_error("data: no data rows in " + path);
  return t;
}

std::size_t column_index(const RawTable& t, const std::string& name,
                         const std::string& what) {
  auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end())
    throw std::runtime_error("data: " + what + " column '" + name + "' not found");
  return static_cast<std::size_t>(it - t.header.begin());
}

Dataset load_csv_impl(const std::string& path, const CsvOptions& opt,
                      const Standardization* external_stats) {
  const RawTable table = read_table(path, opt.delimiter);

  const bool use_response = !opt.response_column.empty();
  const std::size_t target_col =
      use_response ? column_index(table, opt.response_column, "response")
                   : column_index(table, opt.label_column, "label");

  Dataset ds;
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (j != target_col) ds.feature_names.push_back(table.header[j]);
  const std::size_t n_feat = ds.feature_names.size();

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<char>> missing;
  std::vector<double> target_raw;
  bool any_missing = false;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    std::vector<double> feat;
    std::vector<char> miss;
    feat.reserve(n_feat);
    double value = 0.0;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j == target_col) {
        if (use_response) {
          if (!parse_double(fields[j], value))
            throw std::runtime_error("data: row " + std::to_string(r + 2) +
                                     ": unparseable response '" + fields[j] + "'");
        } else if (!opt.label_map.empty()) {
          auto it = opt.label_map.find(trim(fields[j]));
          if (it == opt.label_map.end())
            throw std::runtime_error("data: row " + std::to_string(r + 2) +
                                     ": unknown label value '" + fields[j] + "'");
          value = it->second;
        } else {
          if (!parse_double(fields[j], value))
            throw std::runtime_error("data: row " + std::to_string(r + 2) +
                                     ": unparseable label '" + fields[j] + "'");
        }
        continue;
      }
      double v = 0.0;
      if (parse_double(fields[j], v)) {
        feat.push_back(v);
        miss.push_back(0);
      } else if (trim(fields[j]).empty() || trim(fields[j]) == "?" ||
                 trim(fields[j]) == "NA") {
        feat.push_back(0.0);
        miss.push_back(1);
        any_missing = true;
      } else {
        throw std::runtime_error("data: row " + std::to_string(r + 2) +
                                 ": unparseable value '" + fields[j] + "'");
      }
    }
    rows.push_back(std::move(feat));
    missing.push_back(std::move(miss));
    target_raw.push_back(value);
  }

  if (any_missing && !opt.impute_missing) {
    // reject rows carrying missing values
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (std::none_of(missing[r].begin(), missing[r].end(),
                       [](char m) { return m != 0; }))
        keep.push_back(r);
    if (keep.empty()) throw std::runtime_error("data: all rows have missing values");
    std::vector<std::vector<double>> kept_rows;
    std::vector<double> kept_target;
    for (auto r : keep) {
      kept_rows.push_back(std::move(rows[r]));
      kept_target.push_back(target_raw[r]);
    }
    rows = std::move(kept_rows);
    target_raw = std::move(kept_target);
    missing.assign(rows.size(), std::vector<char>(n_feat, 0));
    any_missing = false;
  }

  const std::size_t n = rows.size();
  if (any_missing) {
    // mean imputation from complete entries, per column
    for (std::size_t j = 0; j < n_feat; ++j) {
      double sum = 0.0;
      std::size_t cnt = 0;
      for (std::size_t r = 0; r < n; ++r)
        if (!missing[r][j]) {
          sum += rows[r][j];
          ++cnt;
        }
      const double m = cnt ? sum / static_cast<double>(cnt) : 0.0;
      for (std::size_t r = 0; r < n; ++r)
        if (missing[r][j]) rows[r][j] = m;
    }
  }

  // labels / response
  ds.labels.resize(n);
  if (use_response) {
    const auto [mn_it, mx_it] = std::minmax_element(target_raw.begin(), target_raw.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx - mn <= 0.0)
      throw std::runtime_error("data: response column is constant");
    ds.response.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double yr = 2.0 * (target_raw[r] - mn) / (mx - mn) - 1.0;
      ds.response[r] = yr;
      ds.labels[r] = yr >= 0.0 ? 1 : -1;
    }
  } else if (!opt.label_map.empty()) {
    for (std::size_t r = 0; r < n; ++r) {
      if (target_raw[r] != 1.0 && target_raw[r] != -1.0)
        throw std::runtime_error("data: label map must produce +1/-1");
      ds.labels[r] = static_cast<int>(target_raw[r]);
    }
  } else {
    for (std::size_t r = 0; r < n; ++r)
      ds.labels[r] = target_raw[r] >= opt.label_threshold ? 1 : -1;
  }

  ds.features = Matrix(n, n_feat);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < n_feat; ++j) ds.features(r, j) = rows[r][j];
  ds.split = n;

  // standardize: past statistics, applied to every row
  if (external_stats) {
    if (external_stats->mean.size() != n_feat)
      throw std::runtime_error("data: standardization stats have wrong width");
    ds.stats = *external_stats;
  } else {
    ds.stats.mean.assign(n_feat, 0.0);
    ds.stats.stddev.assign(n_feat, 1.0);
    const std::size_t past = ds.split;
    for (std::size_t j = 0; j < n_feat; ++j) {
      double sum = 0.0;
      for (std::size_t r = 0; r < past; ++r) sum += ds.features(r, j);
      const double mean = sum / static_cast<double>(past);
      double ss = 0.0;
      for (std::size_t r = 0; r < past; ++r) {
        const double d = ds.features(r, j) - mean;
        ss += d * d;
      }
      const double var = ss / static_cast<double>(past);
      ds.stats.mean[j] = mean;
      ds.stats.stddev[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < n_feat; ++j)
      ds.features(r, j) = (ds.features(r, j) - ds.stats.mean[j]) / ds.stats.stddev[j];

  return ds;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  return load_csv_impl(path, options, nullptr);
}

Dataset load_csv(const std::string& path, const CsvOptions& options,
                 const Standardization& stats) {
  return load_csv_impl(path, options, &stats);
}

FeatureWeights wilcoxon_weights(const Dataset& data) {
  const std::size_t past = data.split;
  if (past == 0) throw std::runtime_error("data: no past instances");
  std::vector<char> positive(past);
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < past; ++i) {
    positive[i] = data.labels[i] > 0;
    (positive[i] ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg)
    throw std::runtime_error("data: wilcoxon weights need both classes among past instances");

  FeatureWeights w;
  w.psi.resize(data.cols());
  std::vector<double> col(past);
  for (std::size_t j = 0; j < data.cols(); ++j) {
    for (std::size_t i = 0; i < past; ++i) col[i] = data.features(i, j);
    const double auc = rank_auc(col, positive);
    w.psi[j] = std::abs(2.0 * auc - 1.0);
  }
  return w;
}

std::pair<Dataset, FlipRecord> inject_flips(const Dataset& data,
                                            const std::vector<double>& response,
                                            double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("data: flip fraction must be in [0, 1]");
  if (response.size() != data.rows())
    throw std::invalid_argument("data: response length mismatch");

  const std::size_t n = data.rows();
  const std::size_t n_flip = static_cast<std::size_t>(fraction * static_cast<double>(n));

  Rng rng(seed);
  auto chosen = rng.sample_without_replacement(n, n_flip);
  std::sort(chosen.begin(), chosen.end());

  Dataset flipped = data;
  FlipRecord rec;
  rec.flipped_indices = chosen;
  rec.flipped.assign(n, 0);
  rec.original_response = response;
  for (auto i : chosen) {
    flipped.labels[i] = -flipped.labels[i];
    rec.flipped[i] = 1;
  }
  rec.true_anomaly_score.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    rec.true_anomaly_score[i] = std::abs(response[i] - flipped.labels[i]);
  return {std::move(flipped), std::move(rec)};
}

}  // namespace softhad
