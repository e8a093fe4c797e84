#include "softhad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "parallel.hpp"
#include "softhad/stats.hpp"

namespace softhad {

double weighted_distance_sq(std::span<const double> a, std::span<const double> b,
                            const FeatureWeights& psi) {
  if (a.size() != b.size() || a.size() != psi.psi.size())
    throw std::invalid_argument("graph: feature length mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    acc += psi.psi[j] * d * d;
  }
  return acc;
}

void LaplacianView::apply(std::span<const double> v, std::span<double> out) const {
  const auto& g = *g_;
  if (v.size() != g.node_count || out.size() != g.node_count)
    throw std::invalid_argument("graph: laplacian dimension mismatch");
  for (std::size_t i = 0; i < g.node_count; ++i) {
    double acc = g.degrees[i] * v[i];
    for (const auto& [j, w] : g.neighbors[i]) acc -= w * v[j];
    out[i] = acc;
  }
}

LaplacianView laplacian(const SimilarityGraph& graph) { return LaplacianView(graph); }

void add_edge(SimilarityGraph& g, std::size_t i, std::size_t j, double w) {
  auto insert = [](std::vector<std::pair<std::size_t, double>>& list,
                   std::size_t n, double wt) {
    auto it = std::lower_bound(list.begin(), list.end(), n,
                               [](const auto& e, std::size_t x) { return e.first < x; });
    if (it != list.end() && it->first == n) return;  // already present
    list.insert(it, {n, wt});
  };
  insert(g.neighbors[i], j, w);
  insert(g.neighbors[j], i, w);
}

void refresh_degrees(SimilarityGraph& g) {
  g.degrees.assign(g.node_count, 0.0);
  for (std::size_t i = 0; i < g.node_count; ++i)
    for (const auto& [j, w] : g.neighbors[i]) g.degrees[i] += w;
}

double choose_sigma(const Matrix& rows, const FeatureWeights& psi,
                    const SigmaChoice& choice, std::size_t pair_sample,
                    std::uint64_t seed) {
  if (choice.mode == SigmaMode::kFixed) {
    if (choice.fixed_value <= 0.0)
      throw std::invalid_argument("graph: fixed sigma must be positive");
    return choice.fixed_value;
  }
  const std::size_t n = rows.rows();
  if (n < 2) throw std::invalid_argument("graph: need at least 2 instances for sigma");

  std::vector<double> dists;
  const std::size_t total_pairs = n * (n - 1) / 2;
  if (total_pairs <= pair_sample) {
    dists.reserve(total_pairs);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        dists.push_back(std::sqrt(weighted_distance_sq(rows.row(i), rows.row(j), psi)));
  } else {
    Rng rng(seed);
    dists.reserve(pair_sample);
    while (dists.size() < pair_sample) {
      const std::size_t i = rng.below(n);
      const std::size_t j = rng.below(n);
      if (i == j) continue;
      dists.push_back(std::sqrt(weighted_distance_sq(rows.row(i), rows.row(j), psi)));
    }
  }

  double mean = 0.0;
  for (double d : dists) mean += d;
  mean /= static_cast<double>(dists.size());
  double var = 0.0;
  for (double d : dists) var += (d - mean) * (d - mean);
  var /= static_cast<double>(dists.size());

  const double sigma = choice.mode == SigmaMode::kVariance
                           ? 0.1 * var
                           : std::sqrt(0.1 * var);
  if (!(sigma > 0.0))
    throw std::runtime_error("graph: degenerate pairwise distances (zero variance)");
  return sigma;
}

double choose_sigma(const Dataset& data, const FeatureWeights& psi,
                    const SigmaChoice& choice, std::size_t pair_sample,
                    std::uint64_t seed) {
  return choose_sigma(data.features, psi, choice, pair_sample, seed);
}

SimilarityGraph build_knn_graph(const Matrix& rows, const FeatureWeights& psi,
                                std::size_t k, double sigma, std::size_t threads) {
  const std::size_t n = rows.rows();
  if (k < 1) throw std::invalid_argument("graph: k must be >= 1");
  if (k >= n) throw std::invalid_argument("graph: k must be below the node count");
  if (!(sigma > 0.0)) throw std::invalid_argument("graph: sigma must be positive");

  // per-node k nearest, ties at the k-th distance broken by lower index
  std::vector<std::vector<std::pair<std::size_t, double>>> selected(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back(weighted_distance_sq(rows.row(i), rows.row(j), psi), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                      cand.end());
    selected[i].reserve(k);
    for (std::size_t t = 0; t < k; ++t)
      selected[i].emplace_back(cand[t].second, cand[t].first);
  });

  SimilarityGraph g;
  g.node_count = n;
  g.sigma = sigma;
  g.neighbors.resize(n);
  const double inv_s2 = 1.0 / (sigma * sigma);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, d2] : selected[i]) {
      const double w = std::exp(-d2 * inv_s2);
      if (w > 0.0) add_edge(g, i, j, w);
    }
  }
  refresh_degrees(g);
  return g;
}

SimilarityGraph build_knn_graph(const Dataset& data, const FeatureWeights& psi,
                                std::size_t k, double sigma, std::size_t threads) {
  return build_knn_graph(data.features, psi, k, sigma, threads);
}

void save_edge_list(const SimilarityGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("graph: cannot write " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", graph.sigma);
  out << "nodes " << graph.node_count << " sigma " << buf << "\n";
  for (std::size_t i = 0; i < graph.node_count; ++i) {
    for (const auto& [j, w] : graph.neighbors[i]) {
      if (j <= i) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", w);
      out << i << " " << j << " " << buf << "\n";
    }
  }
}

SimilarityGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("graph: cannot open " + path);
  std::string tok_nodes, tok_sigma;
  SimilarityGraph g;
  if (!(in >> tok_nodes >> g.node_count >> tok_sigma >> g.sigma) ||
      tok_nodes != "nodes" || tok_sigma != "sigma")
    throw std::runtime_error("graph: malformed edge-list header in " + path);
  g.neighbors.resize(g.node_count);
  std::size_t i, j;
  double w;
  while (in >> i >> j >> w) {
    if (i >= g.node_count || j >= g.node_count || i == j)
      throw std::runtime_error("graph: invalid edge in " + path);
    add_edge(g, i, j, w);
  }
  refresh_degrees(g);
  return g;
}

}  // namespace softhad
