#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "softhad/dataset.hpp"
#include "softhad/matrix.hpp"

namespace softhad {

// Weighted k-NN conditional anomaly detector over the same similarity metric
// as the graph methods.
struct KnnModel {
  Matrix references;
  std::vector<int> labels;  // ±1
  std::size_t k = 1;
  FeatureWeights psi;
  double sigma = 1.0;
};

inline constexpr std::size_t kNoExclusion = std::numeric_limits<std::size_t>::max();

// Gaussian-weighted vote of the k nearest references, in [-1, +1]; 0 when all
// weights underflow. `exclude` leaves one reference out, for scoring a
// reference instance against the rest (the query must never vote for itself).
double knn_soft_label(const KnnModel& model, std::span<const double> query,
                      std::size_t exclude = kNoExclusion);

// |knn_soft_label - y_observed|
double knn_anomaly_score(const KnnModel& model, std::span<const double> query,
                         int y_observed, std::size_t exclude = kNoExclusion);

}  // namespace softhad
