#include "softhad/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "parallel.hpp"
#include "softhad/stats.hpp"

namespace softhad {
namespace {

constexpr std::size_t kMaxLloydIterations = 100;

// D^2-proportional seeding over the pool rows.
std::vector<std::size_t> seed_centers(const Matrix& rows, std::size_t k,
                                      const FeatureWeights& psi, Rng& rng) {
  const std::size_t n = rows.rows();
  std::vector<std::size_t> centers;
  centers.reserve(k);
  std::vector<char> taken(n, 0);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t first = static_cast<std::size_t>(rng.below(n));
  centers.push_back(first);
  taken[first] = 1;

  while (centers.size() < k) {
    const auto c = rows.row(centers.back());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) {
        d2[i] = 0.0;
        continue;
      }
      d2[i] = std::min(d2[i], weighted_distance_sq(rows.row(i), c, psi));
      total += d2[i];
    }
    std::size_t next = n;
    if (total > 0.0) {
      const double target = rng.unit() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target && !taken[i]) {
          next = i;
          break;
        }
      }
    }
    if (next == n) {
      // all remaining points coincide with chosen centers; take the first free
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) {
          next = i;
          break;
        }
    }
    centers.push_back(next);
    taken[next] = 1;
  }
  return centers;
}

}  // namespace

BackboneGraph quantize(const Dataset& data, std::size_t k, const FeatureWeights& psi,
                       bool balanced, std::uint64_t seed, std::size_t threads,
                       std::vector<double>* objective_trace) {
  const std::size_t past = data.split;
  if (past == 0) throw std::invalid_argument("backbone: no past instances to quantize");
  Rng rng(seed);

  // instance pool (optionally class-balanced)
  std::vector<std::size_t> pool;
  if (balanced) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < past; ++i)
      (data.labels[i] > 0 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
      throw std::runtime_error("backbone: balanced sampling needs both classes");
    const std::size_t per_class = std::min(pos.size(), neg.size());
    auto pick = [&](std::vector<std::size_t>& cls) {
      auto sel = rng.sample_without_replacement(cls.size(), per_class);
      for (auto s : sel) pool.push_back(cls[s]);
    };
    pick(pos);
    pick(neg);
    std::sort(pool.begin(), pool.end());
  } else {
    pool.resize(past);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
  }

  const std::size_t n = pool.size();
  if (k < 1 || k > n)
    throw std::invalid_argument("backbone: k must be in [1, pool size]");

  Matrix rows = data.features.select_rows(pool);
  const std::size_t dim = rows.cols();

  auto center_idx = seed_centers(rows, k, psi, rng);
  Matrix centroids(k, dim);
  for (std::size_t c = 0; c < k; ++c) {
    auto src = rows.row(center_idx[c]);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
  }

  std::vector<std::size_t> assign(n, 0);
  std::vector<double> assign_d2(n, 0.0);
  for (std::size_t iter = 0; iter < kMaxLloydIterations; ++iter) {
    // assignment (ties -> lower centroid index)
    bool changed = false;
    std::vector<std::size_t> next(n);
    parallel_for(n, threads, [&](std::size_t i) {
      std::size_t best = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d2 = weighted_distance_sq(rows.row(i), centroids.row(c), psi);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      next[i] = best;
      assign_d2[i] = best_d2;
    });
    for (std::size_t i = 0; i < n; ++i)
      if (next[i] != assign[i]) {
        changed = true;
        break;
      }
    assign = std::move(next);
    if (objective_trace) {
      double obj = 0.0;
      for (std::size_t i = 0; i < n; ++i) obj += assign_d2[i];
      objective_trace->push_back(obj);
    }
    if (!changed && iter > 0) break;

    // update: per-cluster means in fixed index order
    Matrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = assign[i];
      ++counts[c];
      auto src = rows.row(i);
      auto dst = sums.row(c);
      for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // re-seed from the farthest point
        std::size_t far = 0;
        double far_d2 = -1.0;
        for (std::size_t i = 0; i < n; ++i)
          if (assign_d2[i] > far_d2) {
            far_d2 = assign_d2[i];
            far = i;
          }
        auto src = rows.row(far);
        std::copy(src.begin(), src.end(), centroids.row(c).begin());
        assign[far] = c;
        assign_d2[far] = 0.0;
        continue;
      }
      auto s = sums.row(c);
      auto dst = centroids.row(c);
      for (std::size_t j = 0; j < dim; ++j)
        dst[j] = s[j] / static_cast<double>(counts[c]);
    }
  }

  BackboneGraph bb;
  bb.centroids = std::move(centroids);
  bb.pool = std::move(pool);
  bb.assignment = assign;
  bb.multiplicity.assign(k, 0);
  bb.pseudo_target.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = assign[i];
    ++bb.multiplicity[c];
    bb.pseudo_target[c] += data.labels[bb.pool[i]];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (bb.multiplicity[c] > 0)
      bb.pseudo_target[c] /= static_cast<double>(bb.multiplicity[c]);
  return bb;
}

void backbone_graph(BackboneGraph& bb, std::size_t graph_k, double sigma,
                    const FeatureWeights& psi, std::size_t threads) {
  if (graph_k >= bb.size())
    throw std::invalid_argument("backbone: graph_k must be below the centroid count");
  bb.graph = build_knn_graph(bb.centroids, psi, graph_k, sigma, threads);
  bb.has_graph = true;
}

SimilarityGraph attach_recent(const BackboneGraph& bb, const Matrix& recent,
                              std::size_t graph_k, double sigma,
                              const FeatureWeights& psi,
                              const AttachOptions& options) {
  if (!bb.has_graph) throw std::invalid_argument("backbone: graph not built");
  if (recent.rows() == 0) throw std::invalid_argument("backbone: empty recent set");
  const std::size_t k = bb.size();
  const std::size_t m = recent.rows();

  SimilarityGraph g;
  g.node_count = k + m;
  g.sigma = sigma;
  g.neighbors.resize(g.node_count);
  for (std::size_t i = 0; i < k; ++i) g.neighbors[i] = bb.graph.neighbors[i];

  const double inv_s2 = 1.0 / (sigma * sigma);
  for (std::size_t r = 0; r < m; ++r) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(options.recent_recent ? k + m - 1 : k);
    for (std::size_t c = 0; c < k; ++c)
      cand.emplace_back(weighted_distance_sq(recent.row(r), bb.centroids.row(c), psi), c);
    if (options.recent_recent) {
      for (std::size_t s = 0; s < m; ++s) {
        if (s == r) continue;
        cand.emplace_back(weighted_distance_sq(recent.row(r), recent.row(s), psi),
                          k + s);
      }
    }
    const std::size_t take = std::min(graph_k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take),
                      cand.end());
    for (std::size_t t = 0; t < take; ++t) {
      const double w = std::exp(-cand[t].first * inv_s2);
      if (w > 0.0) add_edge(g, k + r, cand[t].second, w);
    }
  }
  refresh_degrees(g);
  return g;
}

double quantization_objective(const BackboneGraph& bb, const Dataset& data,
                              const FeatureWeights& psi) {
  double obj = 0.0;
  for (std::size_t i = 0; i < bb.pool.size(); ++i)
    obj += weighted_distance_sq(data.features.row(bb.pool[i]),
                                bb.centroids.row(bb.assignment[i]), psi);
  return obj;
}

void save_backbone(const BackboneGraph& bb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("backbone: cannot write " + path);
  char buf[64];
  for (std::size_t c = 0; c < bb.size(); ++c) {
    auto row = bb.centroids.row(c);
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  std::ofstream meta(path + ".meta");
  if (!meta) throw std::runtime_error("backbone: cannot write " + path + ".meta");
  meta << "centroids " << bb.size() << "\n";
  for (std::size_t c = 0; c < bb.size(); ++c) {
    std::snprintf(buf, sizeof(buf), "%.17g", bb.pseudo_target[c]);
    meta << bb.multiplicity[c] << " " << buf << "\n";
  }
}

BackboneGraph load_backbone(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("backbone: cannot open " + path);
  BackboneGraph bb;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    bb.centroids.append_row(vals);
  }
  std::ifstream meta(path + ".meta");
  if (!meta) throw std::runtime_error("backbone: cannot open " + path + ".meta");
  std::string tok;
  std::size_t k = 0;
  if (!(meta >> tok >> k) || tok != "centroids" || k != bb.size())
    throw std::runtime_error("backbone: malformed sidecar for " + path);
  bb.multiplicity.resize(k);
  bb.pseudo_target.resize(k);
  for (std::size_t c = 0; c < k; ++c)
    if (!(meta >> bb.multiplicity[c] >> bb.pseudo_target[c]))
      throw std::runtime_error("backbone: truncated sidecar for " + path);
  return bb;
}

}  // namespace softhad
