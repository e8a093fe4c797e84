#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "softhad/dataset.hpp"
#include "softhad/matrix.hpp"

namespace softhad {

// Sparse symmetric similarity graph. Weights are in (0, 1]; zero-weight
// (underflowed) edges are never stored.
struct SimilarityGraph {
  std::size_t node_count = 0;
  // per-node (neighbor, weight) lists, sorted by neighbor index
  std::vector<std::vector<std::pair<std::size_t, double>>> neighbors;
  std::vector<double> degrees;  // d_ii = sum_j w_ij
  double sigma = 0.0;
};

// Matrix-vector product with the unnormalized Laplacian L = D - W.
class LaplacianView {
 public:
  explicit LaplacianView(const SimilarityGraph& g) : g_(&g) {}
  void apply(std::span<const double> v, std::span<double> out) const;
  std::size_t size() const { return g_->node_count; }

 private:
  const SimilarityGraph* g_;
};

LaplacianView laplacian(const SimilarityGraph& graph);

// sum_j psi_j * (a_j - b_j)^2
double weighted_distance_sq(std::span<const double> a, std::span<const double> b,
                            const FeatureWeights& psi);

enum class SigmaMode {
  kFixed,       // use the supplied value as sigma
  kVarianceSq,  // sigma^2 = 0.1 * Var(pairwise distances)   (default)
  kVariance,    // sigma   = 0.1 * Var(pairwise distances)
};

struct SigmaChoice {
  SigmaMode mode = SigmaMode::kVarianceSq;
  double fixed_value = 1.0;
};

// Bandwidth from the empirical variance of psi-weighted pairwise Euclidean
// distances, estimated over at most pair_sample random pairs (exact when the
// pair count fits the budget). Throws when the distances are degenerate.
double choose_sigma(const Matrix& rows, const FeatureWeights& psi,
                    const SigmaChoice& choice, std::size_t pair_sample,
                    std::uint64_t seed);
double choose_sigma(const Dataset& data, const FeatureWeights& psi,
                    const SigmaChoice& choice, std::size_t pair_sample,
                    std::uint64_t seed);

// k-NN graph with Gaussian weights w_ij = exp(-d2(i,j) / sigma^2), edges
// symmetrized by union. Ties at the k-th distance break toward the lower
// index. Exact full-scan search.
SimilarityGraph build_knn_graph(const Matrix& rows, const FeatureWeights& psi,
                                std::size_t k, double sigma,
                                std::size_t threads = 0);
SimilarityGraph build_knn_graph(const Dataset& data, const FeatureWeights& psi,
                                std::size_t k, double sigma,
                                std::size_t threads = 0);

// Plain-text edge list: "nodes <N> sigma <sigma>" header, then one
// "i j w" line per undirected edge (i < j), full-precision weights.
void save_edge_list(const SimilarityGraph& graph, const std::string& path);
SimilarityGraph load_edge_list(const std::string& path);

// Inserts an undirected edge into sorted adjacency lists; used by builders.
void add_edge(SimilarityGraph& g, std::size_t i, std::size_t j, double w);

// Recomputes degrees from the adjacency lists.
void refresh_degrees(SimilarityGraph& g);

}  // namespace softhad
