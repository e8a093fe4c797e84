// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] = path to the CLI binary, argv[2] = path to the data dir.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "softhad/backbone.hpp"
#include "softhad/baseline.hpp"
#include "softhad/dataset.hpp"
#include "softhad/eval.hpp"
#include "softhad/graph.hpp"
#include "softhad/harmonic.hpp"
#include "softhad/stats.hpp"

using namespace softhad;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail = "") {
  std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion,
              name.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

FeatureWeights ones(std::size_t n) {
  FeatureWeights w;
  w.psi.assign(n, 1.0);
  return w;
}

SimilarityGraph random_graph(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = rng.normal();
  return build_knn_graph(m, ones(3), std::min<std::size_t>(6, n - 1), 1.5);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- criterion 1 ----------------------------------------------------------
void criterion_solver_oracle() {
  const auto t0 = Clock::now();
  Rng rng(91);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 10 + rng.below(191);
    auto g = random_graph(n, 5000 + trial);
    std::vector<double> y(n), w(n);
    const double c_l = 0.1 + 9.9 * rng.unit();
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.below(2) ? 1.0 : -1.0;
      w[i] = c_l;
    }
    HarmonicConfig cfg;
    cfg.c_l = c_l;
    cfg.gamma_g = 5.0 * rng.unit();
    cfg.solver_tol = 1e-12;
    auto it = solve_soft_harmonic(g, y, w, cfg);
    auto dn = closed_form_oracle(g, y, w, cfg);
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      scale = std::max(scale, std::abs(dn.ell[i]));
      diff = std::max(diff, std::abs(it.ell[i] - dn.ell[i]));
    }
    worst = std::max(worst, diff / std::max(scale, 1e-300));
  }
  const double dt = seconds_since(t0);
  char detail[128];
  std::snprintf(detail, sizeof(detail), "max relative deviation %.2e, %.2f s",
                worst, dt);
  report(1, "solver matches dense closed form on 50 random graphs",
         worst <= 1e-8 && dt < 10.0, detail);
}

// ---- criterion 2 ----------------------------------------------------------
void criterion_analytic_score_laws() {
  double worst_isolated = 0.0;
  for (double c_l : {0.2, 0.5, 1.0, 2.0, 5.0}) {
    for (double gamma : {0.01, 0.1, 1.0, 5.0, 50.0}) {
      SimilarityGraph g;
      g.node_count = 1;
      g.neighbors.resize(1);
      refresh_degrees(g);
      std::vector<double> y{1.0}, w{c_l};
      HarmonicConfig cfg;
      cfg.c_l = c_l;
      cfg.gamma_g = gamma;
      cfg.solver_tol = 1e-14;
      auto s = solve_soft_harmonic(g, y, w, cfg);
      const double raw = std::abs(s.ell[0] - 1.0);
      worst_isolated = std::max(worst_isolated,
                                std::abs(raw - gamma / (c_l + gamma)));
    }
  }

  double worst_constant = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    auto g = random_graph(80, 7000 + trial);
    const double c_l = 1.0 + trial, gamma = 0.5 * (trial + 1);
    std::vector<double> y(80, 1.0), w(80, c_l);
    HarmonicConfig cfg;
    cfg.c_l = c_l;
    cfg.gamma_g = gamma;
    cfg.solver_tol = 1e-13;
    auto s = solve_soft_harmonic(g, y, w, cfg);
    std::vector<int> obs(80, 1);
    for (double raw : anomaly_scores(s, obs))
      worst_constant = std::max(worst_constant,
                                std::abs(raw - gamma / (c_l + gamma)));
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "isolated dev %.2e, constant dev %.2e",
                worst_isolated, worst_constant);
  report(2, "isolated-node and constant-label score laws",
         worst_isolated <= 1e-12 && worst_constant <= 1e-10, detail);
}

// ---- criterion 3 ----------------------------------------------------------
void criterion_harmonic_degeneration() {
  Rng rng(41);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t labeled = 3 + rng.below(6);
    SimilarityGraph g;
    g.node_count = labeled + 1;
    g.neighbors.resize(labeled + 1);
    std::vector<double> y(labeled + 1, 0.0), w(labeled + 1, 1e9);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < labeled; ++j) {
      const double wt = 0.1 + rng.unit();
      add_edge(g, labeled, j, wt);
      y[j] = rng.below(2) ? 1.0 : -1.0;
      num += wt * y[j];
      den += wt;
    }
    refresh_degrees(g);
    w[labeled] = 1e-9;
    HarmonicConfig cfg;
    cfg.gamma_g = 0.0;
    cfg.solver_tol = 1e-14;
    auto s = solve_soft_harmonic(g, y, w, cfg);
    worst = std::max(worst, std::abs(s.ell[labeled] - num / den));
  }
  char detail[64];
  std::snprintf(detail, sizeof(detail), "max deviation %.2e", worst);
  report(3, "hard-clamp limit reproduces the weighted neighbor average",
         worst <= 1e-4, detail);
}

// ---- criterion 4 ----------------------------------------------------------
void criterion_norm_shrinkage() {
  double worst_violation = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto g = random_graph(40, 9000 + trial);
    Rng rng(77 + trial);
    std::vector<double> y(40), w(40, 1.0);
    for (auto& v : y) v = rng.below(2) ? 1.0 : -1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (double gamma : {0.0, 0.1, 1.0, 10.0, 100.0}) {
      HarmonicConfig cfg;
      cfg.gamma_g = gamma;
      cfg.solver_tol = 1e-13;
      auto s = solve_soft_harmonic(g, y, w, cfg);
      double nrm = 0.0;
      for (double v : s.ell) nrm += v * v;
      nrm = std::sqrt(nrm);
      worst_violation = std::max(worst_violation, nrm - prev);
      prev = nrm;
    }
  }
  char detail[64];
  std::snprintf(detail, sizeof(detail), "worst increase %.2e", worst_violation);
  report(4, "soft-label norm is non-increasing in gamma_g",
         worst_violation <= 1e-12, detail);
}

// ---- criterion 5 ----------------------------------------------------------
void criterion_backbone_fidelity() {
  Rng rng(123);
  Dataset train;
  const std::size_t n = 80;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    train.features.append_row(std::vector<double>{(pos ? 1.5 : -1.5) + rng.normal(),
                                                  rng.normal()});
    train.labels.push_back(pos ? 1 : -1);
  }
  train.split = n;
  Matrix recent;
  std::vector<int> recent_labels;
  for (int i = 0; i < 20; ++i) {
    recent.append_row(std::vector<double>{2.0 * rng.normal(), 2.0 * rng.normal()});
    recent_labels.push_back(i % 2 ? 1 : -1);
  }

  const double sigma = 1.2;
  const std::size_t gk = 8;
  HarmonicConfig cfg;
  cfg.solver_tol = 1e-13;
  ScoreOptions opts;
  opts.graph_k = gk;
  opts.psi = ones(2);

  // quantized path with backbone_k = n
  BackboneGraph quantized = quantize(train, n, ones(2), false, 11);
  backbone_graph(quantized, gk, sigma, ones(2));
  auto a = score_recent(quantized, recent, recent_labels, cfg, opts);

  // unquantized path: the instances themselves as nodes
  BackboneGraph direct;
  direct.centroids = train.features;
  direct.multiplicity.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    direct.pseudo_target.push_back(train.labels[i]);
  backbone_graph(direct, gk, sigma, ones(2));
  auto b = score_recent(direct, recent, recent_labels, cfg, opts);

  double worst = 0.0;
  for (std::size_t i = 0; i < a.raw_score.size(); ++i)
    worst = std::max(worst, std::abs(a.raw_score[i] - b.raw_score[i]));
  char detail[64];
  std::snprintf(detail, sizeof(detail), "max score deviation %.2e", worst);
  report(5, "identity quantization reproduces the unquantized pipeline",
         worst <= 1e-10, detail);
}

// ---- criterion 6 ----------------------------------------------------------
// Bandwidth frozen from calibration: a quarter of the median psi-weighted
// pairwise distance over the full dataset.
double calibrated_sigma(const Dataset& data) {
  Dataset all = data;
  all.split = all.rows();
  const FeatureWeights psi = wilcoxon_weights(all);
  std::vector<double> d;
  d.reserve(all.rows() * (all.rows() - 1) / 2);
  for (std::size_t i = 0; i < all.rows(); ++i)
    for (std::size_t j = i + 1; j < all.rows(); ++j)
      d.push_back(std::sqrt(
          weighted_distance_sq(all.features.row(i), all.features.row(j), psi)));
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2),
                   d.end());
  return 0.25 * d[d.size() / 2];
}

void criterion_uci(const std::string& data_dir) {
  struct Task {
    std::string file, response;
    bool require_gap;
  };
  const std::vector<Task> tasks = {{data_dir + "/housing.csv", "medv", true},
                                   {data_dir + "/auto_mpg.csv", "mpg", false}};
  bool all_pass = true;
  std::string detail;
  for (const auto& task : tasks) {
    const auto t0 = Clock::now();
    CsvOptions opt;
    opt.response_column = task.response;
    Dataset data = load_csv(task.file, opt);

    ExperimentSpec spec;
    spec.data = data;
    spec.response = data.response;
    spec.flip_fraction = 0.03;
    spec.runs = 100;
    spec.seed = 20260826;
    spec.graph_k = 75;
    spec.backbone_k = 200;
    spec.knn_k = 5;
    spec.mode = ScoringMode::kWithheld;
    spec.sigma.mode = SigmaMode::kFixed;
    spec.sigma.fixed_value = calibrated_sigma(data);
    spec.cfg.c_l = 5.0;
    spec.cfg.c_u = 0.001;
    spec.cfg.gamma_g = 0.001;
    const MetricSummary s = run_experiment(spec);
    const double dt = seconds_since(t0);

    const double conc_gap = s.softhad.mean_concordance - s.wknn.mean_concordance;
    const double auc_gap = s.softhad.mean_flip_auc - s.wknn.mean_flip_auc;
    bool ok = conc_gap > 0.0 && auc_gap > 0.0 && dt < 300.0;
    if (task.require_gap) {
      const double pooled_conc =
          std::sqrt(0.5 * (s.softhad.var_concordance + s.wknn.var_concordance));
      ok = ok && conc_gap > pooled_conc;
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%s: SoftHAD conc %.3f / auc %.3f vs wkNN conc %.3f / auc %.3f "
                  "(%.0f s); ",
                  task.response.c_str(), s.softhad.mean_concordance,
                  s.softhad.mean_flip_auc, s.wknn.mean_concordance,
                  s.wknn.mean_flip_auc, dt);
    detail += buf;
    all_pass = all_pass && ok;
  }
  report(6, "SoftHAD outperforms weighted k-NN on Housing and Auto MPG",
         all_pass, detail);
}

// ---- criterion 7 ----------------------------------------------------------
double median5(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

void criterion_planted_cluster() {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto sc = planted_cluster_scenario(seed);
    FeatureWeights psi = ones(2);
    const double sigma =
        choose_sigma(sc.data.features, psi, SigmaChoice{}, 100000, seed);

    BackboneGraph bb = quantize(sc.data, 40, psi, false, seed);
    backbone_graph(bb, 10, sigma, psi);

    Matrix members = sc.data.features.select_rows(sc.cluster_members);
    std::vector<int> member_labels;
    for (auto i : sc.cluster_members) member_labels.push_back(sc.data.labels[i]);

    HarmonicConfig cfg;
    ScoreOptions opts;
    opts.graph_k = 10;
    opts.psi = psi;
    auto soft = score_recent(bb, members, member_labels, cfg, opts);

    KnnModel knn;
    knn.references = sc.data.features;
    knn.labels = sc.data.labels;
    knn.k = 5;
    knn.psi = psi;
    knn.sigma = sigma;
    std::vector<double> knn_scores;
    for (auto i : sc.cluster_members)
      knn_scores.push_back(
          knn_anomaly_score(knn, sc.data.features.row(i), sc.data.labels[i], i));

    if (median5(soft.raw_score) > median5(knn_scores)) ++wins;
  }
  char detail[64];
  std::snprintf(detail, sizeof(detail), "%d/20 seeds", wins);
  report(7, "planted anomalous cluster: SoftHAD median beats wk-NN median",
         wins >= 16, detail);
}

// ---- criterion 8 ----------------------------------------------------------
void criterion_scaling_contract() {
  Rng rng(314);
  Dataset train;
  for (int i = 0; i < 60; ++i) {
    const bool pos = i % 2 == 0;
    train.features.append_row(std::vector<double>{(pos ? 2.0 : -2.0) + rng.normal(),
                                                  rng.normal()});
    train.labels.push_back(pos ? 1 : -1);
  }
  train.split = 60;
  BackboneGraph bb = quantize(train, 20, ones(2), false, 3);
  backbone_graph(bb, 5, 1.0, ones(2));
  Matrix recent;
  std::vector<int> obs;
  for (int i = 0; i < 25; ++i) {
    recent.append_row(std::vector<double>{3.0 * rng.normal(), 3.0 * rng.normal()});
    obs.push_back(i % 2 ? 1 : -1);
  }
  HarmonicConfig cfg;
  ScoreOptions opts;
  opts.graph_k = 5;
  opts.psi = ones(2);
  auto rep = score_recent(bb, recent, obs, cfg, opts);

  bool in_range = true;
  for (double v : rep.scaled_score) in_range = in_range && v >= 0.0 && v <= 1.0;

  // training scores scaled by their own calibration attain both endpoints
  std::vector<double> train_scores{0.31, 0.12, 0.77, 0.44};
  auto cal = fit_scaling(train_scores);
  auto scaled = apply_scaling(train_scores, cal);
  const bool endpoints =
      cal.second > cal.first &&
      *std::min_element(scaled.begin(), scaled.end()) == 0.0 &&
      *std::max_element(scaled.begin(), scaled.end()) == 1.0;

  report(8, "scaled scores stay in [0,1] and training scores attain 0 and 1",
         in_range && endpoints);
}

// ---- criterion 9 ----------------------------------------------------------
std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_cli_determinism(const std::string& cli) {
  const std::string csv = "/tmp/softhad_acc_eval.csv";
  {
    std::ofstream out(csv);
    out << "x1,x2,v\n";
    Rng rng(55);
    for (int i = 0; i < 150; ++i) {
      const double t = rng.unit() * 2.0 - 1.0;
      out << t + 0.3 * rng.normal() << "," << rng.normal() << "," << t << "\n";
    }
  }
  const std::string flags =
      " eval --input " + csv +
      " --response-col v --runs 3 --backbone-k 40 --k-graph 10 --seed 9 "
      "--threads 4 --out /tmp/softhad_acc_summary";
  bool ok = std::system((cli + flags + " >/dev/null 2>&1").c_str()) == 0;
  const std::string first = read_file("/tmp/softhad_acc_summary.csv");
  ok = ok && std::system((cli + flags + " >/dev/null 2>&1").c_str()) == 0;
  const std::string second = read_file("/tmp/softhad_acc_summary.csv");
  ok = ok && !first.empty() && first == second;
  report(9, "repeated cmd_eval invocations produce byte-identical summaries", ok);
}

// ---- criterion 10 ---------------------------------------------------------
void criterion_performance() {
  const auto t0 = Clock::now();
  Rng rng(99);
  Dataset train;
  const std::size_t n = 2000, dim = 10;
  Matrix feats(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    for (std::size_t j = 0; j < dim; ++j)
      feats(i, j) = (j == 0 ? (pos ? 1.0 : -1.0) : 0.0) + rng.normal();
    train.labels.push_back(pos ? 1 : -1);
  }
  train.features = std::move(feats);
  train.split = n;

  Matrix recent(500, dim);
  std::vector<int> obs;
  for (std::size_t i = 0; i < 500; ++i) {
    for (std::size_t j = 0; j < dim; ++j) recent(i, j) = rng.normal();
    obs.push_back(i % 2 ? 1 : -1);
  }

  const FeatureWeights psi = wilcoxon_weights(train);
  const double sigma = choose_sigma(train, psi, SigmaChoice{}, 100000, 1);
  BackboneGraph bb = quantize(train, 500, psi, false, 1);
  backbone_graph(bb, 75, sigma, psi);
  HarmonicConfig cfg;
  ScoreOptions opts;
  opts.graph_k = 75;
  opts.psi = psi;
  auto rep = score_recent(bb, recent, obs, cfg, opts);

  const double dt = seconds_since(t0);
  char detail[64];
  std::snprintf(detail, sizeof(detail), "%.2f s end-to-end", dt);
  report(10, "2000 -> 500 centroids, 500 recent scored in under 10 s",
         rep.raw_score.size() == 500 && dt < 10.0, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <cli-binary> <data-dir>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const std::string data_dir = argv[2];

  criterion_solver_oracle();
  criterion_analytic_score_laws();
  criterion_harmonic_degeneration();
  criterion_norm_shrinkage();
  criterion_backbone_fidelity();
  criterion_uci(data_dir);
  criterion_planted_cluster();
  criterion_scaling_contract();
  criterion_cli_determinism(cli);
  criterion_performance();

  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
