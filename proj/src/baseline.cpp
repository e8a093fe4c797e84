#include "softhad/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "softhad/graph.hpp"

namespace softhad {

double knn_soft_label(const KnnModel& model, std::span<const double> query,
                      std::size_t exclude) {
  const std::size_t n = model.references.rows();
  if (n == 0) throw std::invalid_argument("baseline: empty reference set");
  if (model.k < 1 || model.k > n)
    throw std::invalid_argument("baseline: k out of range");

  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == exclude) continue;
    cand.emplace_back(weighted_distance_sq(query, model.references.row(j), model.psi), j);
  }
  if (cand.empty()) throw std::invalid_argument("baseline: no usable references");
  const std::size_t take = std::min(model.k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take),
                    cand.end());

  const double inv_s2 = 1.0 / (model.sigma * model.sigma);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < take; ++t) {
    const double w = std::exp(-cand[t].first * inv_s2);
    num += w * model.labels[cand[t].second];
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

double knn_anomaly_score(const KnnModel& model, std::span<const double> query,
                         int y_observed, std::size_t exclude) {
  if (y_observed != 1 && y_observed != -1)
    throw std::invalid_argument("baseline: observed label must be ±1");
  return std::abs(knn_soft_label(model, query, exclude) - y_observed);
}

}  // namespace softhad
