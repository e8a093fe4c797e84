#include "softhad/harmonic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace softhad {
namespace {

SoftLabels make_soft_labels(std::vector<double> ell) {
  SoftLabels s;
  s.confidence.reserve(ell.size());
  s.predicted_sign.reserve(ell.size());
  for (double v : ell) {
    s.confidence.push_back(std::abs(v));
    s.predicted_sign.push_back(v > 0.0 ? 1 : (v < 0.0 ? -1 : 0));
  }
  s.ell = std::move(ell);
  return s;
}

void check_inputs(const SimilarityGraph& graph, std::span<const double> y,
                  std::span<const double> weights, const HarmonicConfig& cfg) {
  if (y.size() != graph.node_count || weights.size() != graph.node_count)
    throw std::invalid_argument("harmonic: dimension mismatch");
  if (!(cfg.solver_tol > 0.0))
    throw std::invalid_argument("harmonic: solver_tol must be positive");
  if (cfg.gamma_g < 0.0)
    throw std::invalid_argument("harmonic: gamma_g must be non-negative");
  for (double w : weights)
    if (!(w > 0.0))
      throw std::invalid_argument("harmonic: empirical weights must be positive");
}

// out = (L + gamma I + C) v
void apply_system(const SimilarityGraph& g, double gamma,
                  std::span<const double> c, std::span<const double> v,
                  std::span<double> out) {
  for (std::size_t i = 0; i < g.node_count; ++i) {
    double acc = (g.degrees[i] + gamma + c[i]) * v[i];
    for (const auto& [j, w] : g.neighbors[i]) acc -= w * v[j];
    out[i] = acc;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

SoftLabels solve_soft_harmonic(const SimilarityGraph& graph,
                               std::span<const double> y,
                               std::span<const double> empirical_weights,
                               const HarmonicConfig& cfg) {
  check_inputs(graph, y, empirical_weights, cfg);
  const std::size_t n = graph.node_count;
  const std::size_t max_iter =
      cfg.solver_max_iter ? cfg.solver_max_iter : 10 * std::max<std::size_t>(n, 1);

  // symmetric SPD form: (L + gamma I + C) ell = C y
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = empirical_weights[i] * y[i];
  const double b_norm = std::sqrt(dot(b, b));
  std::vector<double> x(n, 0.0);
  if (b_norm == 0.0) return make_soft_labels(std::move(x));

  std::vector<double> inv_diag(n);
  for (std::size_t i = 0; i < n; ++i)
    inv_diag[i] = 1.0 / (graph.degrees[i] + cfg.gamma_g + empirical_weights[i]);

  std::vector<double> r = b, z(n), p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    apply_system(graph, cfg.gamma_g, empirical_weights, p, q);
    const double alpha = rz / dot(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    const double res = std::sqrt(dot(r, r)) / b_norm;
    if (res <= cfg.solver_tol) return make_soft_labels(std::move(x));
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", std::sqrt(dot(r, r)) / b_norm);
  throw std::runtime_error(std::string("harmonic: solver did not converge, residual ") +
                           buf);
}

SoftLabels closed_form_oracle(const SimilarityGraph& graph,
                              std::span<const double> y,
                              std::span<const double> empirical_weights,
                              const HarmonicConfig& cfg) {
  check_inputs(graph, y, empirical_weights, cfg);
  const std::size_t n = graph.node_count;
  if (n > 2000) throw std::invalid_argument("harmonic: oracle guarded to 2000 nodes");

  // M = C^{-1} K + I with K = L + gamma I
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double inv_c = 1.0 / empirical_weights[i];
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
        inv_c * (graph.degrees[i] + cfg.gamma_g) + 1.0;
    for (const auto& [j, w] : graph.neighbors[i])
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -inv_c * w;
  }
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) rhs(static_cast<Eigen::Index>(i)) = y[i];
  Eigen::VectorXd sol = m.partialPivLu().solve(rhs);
  std::vector<double> ell(n);
  for (std::size_t i = 0; i < n; ++i) ell[i] = sol(static_cast<Eigen::Index>(i));
  return make_soft_labels(std::move(ell));
}

double objective_value(const SimilarityGraph& graph, std::span<const double> y,
                       std::span<const double> empirical_weights,
                       const HarmonicConfig& cfg, std::span<const double> ell) {
  if (ell.size() != graph.node_count)
    throw std::invalid_argument("harmonic: dimension mismatch");
  double fit = 0.0;
  for (std::size_t i = 0; i < graph.node_count; ++i) {
    const double d = ell[i] - y[i];
    fit += empirical_weights[i] * d * d;
  }
  double smooth = 0.0;
  for (std::size_t i = 0; i < graph.node_count; ++i) {
    smooth += cfg.gamma_g * ell[i] * ell[i];
    for (const auto& [j, w] : graph.neighbors[i])
      if (j > i) {
        const double d = ell[i] - ell[j];
        smooth += w * d * d;  // ell^T L ell = sum_{i<j} w_ij (ell_i - ell_j)^2
      }
  }
  return fit + smooth;
}

std::vector<double> anomaly_scores(const SoftLabels& soft,
                                   std::span<const int> y_observed) {
  if (y_observed.size() != soft.ell.size())
    throw std::invalid_argument("harmonic: dimension mismatch");
  std::vector<double> s(soft.ell.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = std::abs(soft.ell[i] - y_observed[i]);
  return s;
}

std::pair<double, double> fit_scaling(std::span<const double> train_scores) {
  if (train_scores.empty())
    throw std::invalid_argument("harmonic: empty training scores");
  const auto [mn, mx] = std::minmax_element(train_scores.begin(), train_scores.end());
  return {*mn, *mx};
}

std::vector<double> apply_scaling(std::span<const double> scores,
                                  std::pair<double, double> calibration) {
  const double range = calibration.second - calibration.first;
  std::vector<double> out(scores.size(), 0.0);
  if (range < 1e-12) return out;
  for (std::size_t i = 0; i < scores.size(); ++i)
    out[i] = std::clamp((scores[i] - calibration.first) / range, 0.0, 1.0);
  return out;
}

AnomalyReport score_recent(const BackboneGraph& bb, const Matrix& recent,
                           std::span<const int> recent_labels,
                           const HarmonicConfig& cfg, const ScoreOptions& options) {
  if (recent_labels.size() != recent.rows())
    throw std::invalid_argument("harmonic: recent labels length mismatch");
  const std::size_t k = bb.size();
  const std::size_t m = recent.rows();

  AttachOptions attach{.recent_recent = options.recent_recent};
  SimilarityGraph graph = attach_recent(bb, recent, options.graph_k, bb.graph.sigma,
                                        options.psi, attach);

  std::vector<double> y(k + m), weights(k + m);
  for (std::size_t c = 0; c < k; ++c) {
    y[c] = bb.pseudo_target[c];
    weights[c] = cfg.c_l * (options.multiplicity_weighting
                                ? static_cast<double>(bb.multiplicity[c])
                                : 1.0);
  }
  for (std::size_t r = 0; r < m; ++r) {
    if (options.mode == ScoringMode::kWithheld) {
      y[k + r] = 0.0;
      weights[k + r] = cfg.c_u;
    } else {
      y[k + r] = recent_labels[r];
      weights[k + r] = cfg.c_l;
    }
  }

  SoftLabels soft = solve_soft_harmonic(graph, y, weights, cfg);

  AnomalyReport report;
  report.node_ids.resize(m);
  report.raw_score.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    report.node_ids[r] = r;
    report.raw_score[r] = std::abs(soft.ell[k + r] - recent_labels[r]);
  }

  // calibration: the backbone nodes scored against their own pseudo-targets
  std::vector<double> train_scores(k);
  for (std::size_t c = 0; c < k; ++c)
    train_scores[c] = std::abs(soft.ell[c] - bb.pseudo_target[c]);
  const auto cal = fit_scaling(train_scores);
  report.calibration_min = cal.first;
  report.calibration_max = cal.second;
  report.scaled_score = apply_scaling(report.raw_score, cal);
  return report;
}

void write_report_csv(const AnomalyReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("harmonic: cannot write " + path);
  out << "node_id,raw_score,scaled_score\n";
  char buf[64];
  for (std::size_t i = 0; i < report.node_ids.size(); ++i) {
    out << report.node_ids[i];
    std::snprintf(buf, sizeof(buf), "%.17g", report.raw_score[i]);
    out << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", report.scaled_score[i]);
    out << "," << buf << "\n";
  }
}

void write_report_json(const AnomalyReport& report, const HarmonicConfig& cfg,
                       const std::string& config_echo_json, const std::string& path) {
  nlohmann::json j;
  j["method"] = report.method;
  j["calibration"] = {{"min", report.calibration_min},
                      {"max", report.calibration_max}};
  j["config"] = {{"c_l", cfg.c_l},
                 {"c_u", cfg.c_u},
                 {"gamma_g", cfg.gamma_g},
                 {"solver_tol", cfg.solver_tol}};
  if (!config_echo_json.empty())
    j["provenance"] = nlohmann::json::parse(config_echo_json);
  j["node_ids"] = report.node_ids;
  j["raw_score"] = report.raw_score;
  j["scaled_score"] = report.scaled_score;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("harmonic: cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace softhad
