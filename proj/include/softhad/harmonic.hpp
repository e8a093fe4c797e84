#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "softhad/backbone.hpp"
#include "softhad/dataset.hpp"
#include "softhad/graph.hpp"

namespace softhad {

struct HarmonicConfig {
  double c_l = 1.0;      // empirical weight of labeled / pseudo-target nodes
  double c_u = 1.0;      // empirical weight of withheld recent nodes
  double gamma_g = 1.0;  // diagonal Laplacian regularizer
  double solver_tol = 1e-10;     // relative residual target
  std::size_t solver_max_iter = 0;  // 0 = 10 * node count
};

// Soft label assignment: ell_i = confidence_i * predicted_sign_i with
// sign(0) = 0.
struct SoftLabels {
  std::vector<double> ell;
  std::vector<double> confidence;
  std::vector<int> predicted_sign;
};

struct AnomalyReport {
  std::vector<std::size_t> node_ids;
  std::vector<double> raw_score;     // |ell_i - y_i|, in [0, 2]
  std::vector<double> scaled_score;  // in [0, 1]
  double calibration_min = 0.0;
  double calibration_max = 0.0;
  std::string method = "softhad";
};

// Solves (L + gamma_g*I + C) ell = C y with C = diag(empirical_weights) by
// Jacobi-preconditioned conjugate gradients; with uniform weights c_l this is
// the soft harmonic solution ell = (c_l^{-1} L + (1 + gamma_g/c_l) I)^{-1} y.
// Throws if the iteration does not reach solver_tol within the budget.
SoftLabels solve_soft_harmonic(const SimilarityGraph& graph,
                               std::span<const double> y,
                               std::span<const double> empirical_weights,
                               const HarmonicConfig& cfg);

// Same system solved by dense factorization of (C^{-1} K + I); correctness
// oracle, guarded to at most 2000 nodes.
SoftLabels closed_form_oracle(const SimilarityGraph& graph,
                              std::span<const double> y,
                              std::span<const double> empirical_weights,
                              const HarmonicConfig& cfg);

// (ell - y)^T C (ell - y) + ell^T (L + gamma_g I) ell
double objective_value(const SimilarityGraph& graph, std::span<const double> y,
                       std::span<const double> empirical_weights,
                       const HarmonicConfig& cfg, std::span<const double> ell);

// raw_score[i] = |ell[i] - y_observed[i]|
std::vector<double> anomaly_scores(const SoftLabels& soft,
                                   std::span<const int> y_observed);

// Per-task min-max calibration from training scores.
std::pair<double, double> fit_scaling(std::span<const double> train_scores);

// clamp((s - min) / (max - min), 0, 1); all zeros when max - min < 1e-12.
std::vector<double> apply_scaling(std::span<const double> scores,
                                  std::pair<double, double> calibration);

enum class ScoringMode { kWithheld, kIncluded };

struct ScoreOptions {
  ScoringMode mode = ScoringMode::kWithheld;
  std::size_t graph_k = 75;
  FeatureWeights psi;
  bool multiplicity_weighting = true;
  bool recent_recent = false;
  std::size_t threads = 0;
};

// End-to-end scoring of recent rows against a backbone: attach, solve, score,
// and scale with a calibration obtained by scoring the backbone nodes
// against their own pseudo-targets.
AnomalyReport score_recent(const BackboneGraph& bb, const Matrix& recent,
                           std::span<const int> recent_labels,
                           const HarmonicConfig& cfg, const ScoreOptions& options);

void write_report_csv(const AnomalyReport& report, const std::string& path);
void write_report_json(const AnomalyReport& report, const HarmonicConfig& cfg,
                       const std::string& config_echo_json, const std::string& path);

}  // namespace softhad
