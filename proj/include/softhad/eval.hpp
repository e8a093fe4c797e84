#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "softhad/dataset.hpp"
#include "softhad/graph.hpp"
#include "softhad/harmonic.hpp"

namespace softhad {

// Area under ROC of `scores` as a detector of flipped instances (ties 1/2).
double flip_detection_auc(std::span<const double> scores,
                          std::span<const char> flipped);

// Fraction of pairs with distinct true scores whose predicted ordering
// matches; predicted ties count 1/2. Throws when true_scores is constant.
double score_concordance(std::span<const double> scores,
                         std::span<const double> true_scores);

struct ExperimentSpec {
  Dataset data;                  // standardized; split is re-drawn per run
  std::vector<double> response;  // y_r per row, in [-1, +1]
  double flip_fraction = 0.03;
  double train_ratio = 2.0 / 3.0;
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  HarmonicConfig cfg;
  std::size_t graph_k = 75;
  std::size_t backbone_k = 200;
  std::size_t knn_k = 0;  // 0 = graph_k
  SigmaChoice sigma;
  ScoringMode mode = ScoringMode::kWithheld;
  bool multiplicity_weighting = true;
  bool balanced = false;
  bool flips_test_only = false;  // default: flips injected before the split
  std::size_t sigma_pair_sample = 100000;
  std::size_t threads = 0;
};

struct MethodMetrics {
  double mean_flip_auc = 0.0;
  double var_flip_auc = 0.0;
  double mean_concordance = 0.0;
  double var_concordance = 0.0;
  std::vector<double> per_run_flip_auc;
  std::vector<double> per_run_concordance;
};

struct MetricSummary {
  std::size_t runs = 0;
  MethodMetrics softhad;
  MethodMetrics wknn;
};

// The flip-injection protocol: per run, inject label flips, draw a random
// train/test split, build psi / sigma / backbone on the (flipped) training
// portion, score the test portion with SoftHAD and weighted k-NN, and
// evaluate both metrics against the ground-truth flip record. Runs execute
// in parallel with per-run derived seeds; the aggregate is reproducible
// bit-identically from spec.seed.
MetricSummary run_experiment(const ExperimentSpec& spec);

struct PlantedScenario {
  Dataset data;
  FlipRecord record;
  std::vector<std::size_t> cluster_members;
};

// Two Gaussian classes plus a tight 5-instance cluster planted inside the
// opposite class's region with flipped labels; the members are mutual
// nearest neighbors, so pure local-vote methods confirm each other's labels.
PlantedScenario planted_cluster_scenario(std::uint64_t seed);

}  // namespace softhad
