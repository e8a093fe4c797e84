#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "softhad/dataset.hpp"
#include "softhad/graph.hpp"
#include "softhad/matrix.hpp"

namespace softhad {

// Quantized stand-in for the training data: k centroids carrying the mass
// (multiplicity) and label evidence (pseudo-target = mean member label) of
// their clusters, plus an optional similarity graph over the centroids.
struct BackboneGraph {
  Matrix centroids;
  std::vector<std::size_t> multiplicity;
  std::vector<double> pseudo_target;      // in [-1, +1]
  std::vector<std::size_t> pool;          // original indices of quantized instances
  std::vector<std::size_t> assignment;    // pool position -> centroid index
  SimilarityGraph graph;
  bool has_graph = false;

  std::size_t size() const { return centroids.rows(); }
};

// k-means over the past rows under the psi-weighted metric. Centers seeded
// with probability proportional to squared distance from already-chosen
// centers; Lloyd iterations until assignments stabilize (100 cap); empty
// clusters re-seeded from the farthest point. With `balanced`, the instance
// pool is first subsampled to equal class counts.
// `objective_trace`, when given, records the clustering objective after each
// assignment step.
BackboneGraph quantize(const Dataset& data, std::size_t k, const FeatureWeights& psi,
                       bool balanced, std::uint64_t seed, std::size_t threads = 0,
                       std::vector<double>* objective_trace = nullptr);

// Fills bb.graph with a k-NN similarity graph over the centroids.
void backbone_graph(BackboneGraph& bb, std::size_t graph_k, double sigma,
                    const FeatureWeights& psi, std::size_t threads = 0);

struct AttachOptions {
  // With recent_recent set, recent nodes also compete as neighbor candidates
  // for each other; by default they connect to centroids only.
  bool recent_recent = false;
};

// Augmented graph over [centroids; recent rows]: centroid-centroid edges are
// taken from bb.graph, each recent row connects to its graph_k nearest
// candidates with Gaussian weights (underflowed weights dropped).
SimilarityGraph attach_recent(const BackboneGraph& bb, const Matrix& recent,
                              std::size_t graph_k, double sigma,
                              const FeatureWeights& psi,
                              const AttachOptions& options = {});

// Plain-text persistence: <path> holds centroid rows as CSV, <path>.meta the
// multiplicities and pseudo-targets.
void save_backbone(const BackboneGraph& bb, const std::string& path);
BackboneGraph load_backbone(const std::string& path);

// Weighted k-means objective: sum over quantized instances of the
// psi-weighted squared distance to the assigned centroid.
double quantization_objective(const BackboneGraph& bb, const Dataset& data,
                              const FeatureWeights& psi);

}  // namespace softhad
