#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "softhad/matrix.hpp"

namespace softhad {

// Per-column standardization statistics (computed over past rows).
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // 1.0 for constant columns
};

// Tabular dataset with ±1 labels. Rows [0, split) are the "past" instances,
// rows [split, rows) the "recent" ones.
struct Dataset {
  Matrix features;
  std::vector<int> labels;  // entries in {-1, +1}
  std::size_t split = 0;
  std::vector<double> response;  // ordinal response scaled to [-1, +1]; may be empty
  std::vector<std::string> feature_names;
  Standardization stats;

  std::size_t rows() const { return features.rows(); }
  std::size_t cols() const { return features.cols(); }
};

struct CsvOptions {
  char delimiter = ',';
  std::string label_column;
  // Optional ordinal response column: scaled to [-1, +1] by min/max, the
  // label becomes +1 iff the scaled response >= 0. When set, label_column
  // is ignored and the response column doubles as the label source.
  std::string response_column;
  // Explicit mapping from label cell text to ±1. When empty, numeric labels
  // are binarized as value >= label_threshold.
  std::map<std::string, int> label_map;
  double label_threshold = 0.0;
  // Rows with missing values are rejected unless this is set, in which case
  // missing features are imputed with the column mean of complete rows.
  bool impute_missing = false;
};

// One per feature column, each in [0, 1].
struct FeatureWeights {
  std::vector<double> psi;
};

// Ground truth for injected label noise.
struct FlipRecord {
  std::vector<std::size_t> flipped_indices;
  std::vector<char> flipped;              // per-row indicator
  std::vector<double> original_response;  // y_r in [-1, +1]
  std::vector<double> true_anomaly_score; // |y_r - y| with the possibly flipped y
};

// Parses a CSV (first row = header), binarizes labels, standardizes every
// feature column to zero mean / unit variance over the past rows. The loaded
// dataset has split = rows (everything past).
Dataset load_csv(const std::string& path, const CsvOptions& options);

// Same, but standardizes with externally supplied statistics (e.g. the stats
// of a previously loaded training set).
Dataset load_csv(const std::string& path, const CsvOptions& options,
                 const Standardization& stats);

// Wilcoxon feature relevance over the past rows: psi_j = |2*AUC_j - 1| where
// AUC_j is the rank AUC of column j separating +1 from -1.
FeatureWeights wilcoxon_weights(const Dataset& data);

// Negates the labels of a uniformly random floor(fraction * rows) subset.
// Deterministic given seed. `response` supplies y_r for the true scores.
std::pair<Dataset, FlipRecord> inject_flips(const Dataset& data,
                                            const std::vector<double>& response,
                                            double fraction, std::uint64_t seed);

}  // namespace softhad
