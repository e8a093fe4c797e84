#include "softhad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "parallel.hpp"
#include "softhad/backbone.hpp"
#include "softhad/baseline.hpp"
#include "softhad/stats.hpp"

namespace softhad {
namespace {

struct RunResult {
  double softhad_auc = 0.0;
  double softhad_conc = 0.0;
  double wknn_auc = 0.0;
  double wknn_conc = 0.0;
};

void summarize(const std::vector<double>& values, double& mean, double& var) {
  mean = std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
  var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
}

RunResult single_run(const ExperimentSpec& spec, std::size_t run) {
  const std::uint64_t run_seed = spec.seed + run;
  const std::size_t n = spec.data.rows();

  // 1. inject flips (before the split, per the default protocol)
  Dataset flipped = spec.data;
  FlipRecord rec;
  if (!spec.flips_test_only) {
    auto [d, r] = inject_flips(spec.data, spec.response, spec.flip_fraction,
                               mix_seed(run_seed, 1));
    flipped = std::move(d);
    rec = std::move(r);
  }

  // 2. random train/test split, stratified on flip status so both slices
  //    keep their share of flips (the flip AUC needs flips in the test slice)
  Rng split_rng(mix_seed(run_seed, 2));
  auto perm = split_rng.sample_without_replacement(n, n);
  const std::size_t n_train =
      static_cast<std::size_t>(spec.train_ratio * static_cast<double>(n));
  if (n_train == 0 || n_train == n)
    throw std::invalid_argument("eval: degenerate train/test split");
  if (!spec.flips_test_only) {
    std::vector<std::size_t> flips, rest;
    for (std::size_t idx : perm)
      (rec.flipped[idx] ? flips : rest).push_back(idx);
    const std::size_t train_flips = static_cast<std::size_t>(
        spec.train_ratio * static_cast<double>(flips.size()));
    std::size_t at = 0;
    for (std::size_t i = 0; i < train_flips; ++i) perm[at++] = flips[i];
    for (std::size_t i = 0; i + train_flips < n_train; ++i) perm[at++] = rest[i];
    for (std::size_t i = train_flips; i < flips.size(); ++i) perm[at++] = flips[i];
    for (std::size_t i = n_train - train_flips; i < rest.size(); ++i)
      perm[at++] = rest[i];
  }

  Dataset run_data;
  run_data.features = flipped.features.select_rows(perm);
  run_data.labels.resize(n);
  std::vector<double> run_response(n);
  for (std::size_t i = 0; i < n; ++i) {
    run_data.labels[i] = flipped.labels[perm[i]];
    run_response[i] = spec.response[perm[i]];
  }
  run_data.split = n_train;

  if (spec.flips_test_only) {
    // flips restricted to the test portion
    Dataset test_part;
    test_part.features = Matrix(0, run_data.cols());
    std::vector<std::size_t> test_idx(n - n_train);
    std::iota(test_idx.begin(), test_idx.end(), n_train);
    test_part.features = run_data.features.select_rows(test_idx);
    test_part.labels.assign(run_data.labels.begin() + static_cast<std::ptrdiff_t>(n_train),
                            run_data.labels.end());
    test_part.split = test_part.rows();
    std::vector<double> test_resp(run_response.begin() + static_cast<std::ptrdiff_t>(n_train),
                                  run_response.end());
    auto [d, r] = inject_flips(test_part, test_resp, spec.flip_fraction,
                               mix_seed(run_seed, 1));
    for (std::size_t i = 0; i < d.rows(); ++i)
      run_data.labels[n_train + i] = d.labels[i];
    rec.flipped.assign(n, 0);
    rec.true_anomaly_score.assign(n, 0.0);
    for (std::size_t i = 0; i < n_train; ++i)
      rec.true_anomaly_score[i] = std::abs(run_response[i] - run_data.labels[i]);
    for (std::size_t i = 0; i < d.rows(); ++i) {
      rec.flipped[n_train + i] = r.flipped[i];
      rec.true_anomaly_score[n_train + i] = r.true_anomaly_score[i];
    }
  }

  // per-row ground truth in run order
  std::vector<char> run_flipped(n);
  std::vector<double> run_true(n);
  if (spec.flips_test_only) {
    run_flipped = rec.flipped;
    run_true = rec.true_anomaly_score;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      run_flipped[i] = rec.flipped[perm[i]];
      run_true[i] = rec.true_anomaly_score[perm[i]];
    }
  }

  // 3. metric ingredients from the (flipped) training portion
  const FeatureWeights psi = wilcoxon_weights(run_data);
  std::vector<std::size_t> train_idx(n_train);
  std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
  const Matrix train_rows = run_data.features.select_rows(train_idx);
  const double sigma = choose_sigma(train_rows, psi, spec.sigma,
                                    spec.sigma_pair_sample, mix_seed(run_seed, 3));

  // 4. backbone over the training rows
  const std::size_t bk = std::min(spec.backbone_k, n_train);
  BackboneGraph bb =
      quantize(run_data, bk, psi, spec.balanced, mix_seed(run_seed, 4), 1);
  if (bb.size() < 2) throw std::runtime_error("eval: backbone too small");
  const std::size_t gk = std::min(spec.graph_k, bb.size() - 1);
  backbone_graph(bb, gk, sigma, psi, 1);

  // 5. score the test portion
  std::vector<std::size_t> test_idx(n - n_train);
  std::iota(test_idx.begin(), test_idx.end(), n_train);
  const Matrix test_rows = run_data.features.select_rows(test_idx);
  std::vector<int> test_labels(run_data.labels.begin() + static_cast<std::ptrdiff_t>(n_train),
                               run_data.labels.end());

  ScoreOptions opts;
  opts.mode = spec.mode;
  opts.graph_k = gk;
  opts.psi = psi;
  opts.multiplicity_weighting = spec.multiplicity_weighting;
  opts.threads = 1;
  const AnomalyReport soft = score_recent(bb, test_rows, test_labels, spec.cfg, opts);

  KnnModel knn;
  knn.references = train_rows;
  knn.labels.assign(run_data.labels.begin(),
                    run_data.labels.begin() + static_cast<std::ptrdiff_t>(n_train));
  knn.k = std::min(spec.knn_k ? spec.knn_k : spec.graph_k, n_train);
  knn.psi = psi;
  knn.sigma = sigma;
  std::vector<double> knn_scores(test_rows.rows());
  for (std::size_t i = 0; i < test_rows.rows(); ++i)
    knn_scores[i] = knn_anomaly_score(knn, test_rows.row(i), test_labels[i]);

  // 6. metrics against the flip record, test portion only
  std::vector<char> test_flipped(run_flipped.begin() + static_cast<std::ptrdiff_t>(n_train),
                                 run_flipped.end());
  std::vector<double> test_true(run_true.begin() + static_cast<std::ptrdiff_t>(n_train),
                                run_true.end());

  RunResult res;
  res.softhad_auc = flip_detection_auc(soft.raw_score, test_flipped);
  res.softhad_conc = score_concordance(soft.raw_score, test_true);
  res.wknn_auc = flip_detection_auc(knn_scores, test_flipped);
  res.wknn_conc = score_concordance(knn_scores, test_true);
  return res;
}

}  // namespace

double flip_detection_auc(std::span<const double> scores,
                          std::span<const char> flipped) {
  return rank_auc(scores, flipped);
}

double score_concordance(std::span<const double> scores,
                         std::span<const double> true_scores) {
  if (scores.size() != true_scores.size())
    throw std::invalid_argument("eval: size mismatch");
  if (scores.size() < 2)
    throw std::invalid_argument("eval: need at least two instances");
  double agree = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = i + 1; j < scores.size(); ++j) {
      if (true_scores[i] == true_scores[j]) continue;
      ++counted;
      const double ds = scores[i] - scores[j];
      if (ds == 0.0)
        agree += 0.5;
      else if ((ds > 0.0) == (true_scores[i] > true_scores[j]))
        agree += 1.0;
    }
  }
  if (counted == 0)
    throw std::invalid_argument("eval: true scores are all equal");
  return agree / static_cast<double>(counted);
}

MetricSummary run_experiment(const ExperimentSpec& spec) {
  if (spec.runs < 1) throw std::invalid_argument("eval: runs must be >= 1");
  if (spec.flip_fraction < 0.0 || spec.flip_fraction > 1.0)
    throw std::invalid_argument("eval: flip fraction must be in [0, 1]");

  std::vector<RunResult> results(spec.runs);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(spec.runs, spec.threads, [&](std::size_t run) {
    try {
      results[run] = single_run(spec, run);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);

  MetricSummary summary;
  summary.runs = spec.runs;
  for (const auto& r : results) {
    summary.softhad.per_run_flip_auc.push_back(r.softhad_auc);
    summary.softhad.per_run_concordance.push_back(r.softhad_conc);
    summary.wknn.per_run_flip_auc.push_back(r.wknn_auc);
    summary.wknn.per_run_concordance.push_back(r.wknn_conc);
  }
  summarize(summary.softhad.per_run_flip_auc, summary.softhad.mean_flip_auc,
            summary.softhad.var_flip_auc);
  summarize(summary.softhad.per_run_concordance, summary.softhad.mean_concordance,
            summary.softhad.var_concordance);
  summarize(summary.wknn.per_run_flip_auc, summary.wknn.mean_flip_auc,
            summary.wknn.var_flip_auc);
  summarize(summary.wknn.per_run_concordance, summary.wknn.mean_concordance,
            summary.wknn.var_concordance);
  return summary;
}

PlantedScenario planted_cluster_scenario(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t per_class = 100;
  const std::size_t cluster_size = 5;
  const double blob_sd = 0.6;
  const double cluster_sd = 0.01;

  PlantedScenario sc;
  Matrix features(2 * per_class + cluster_size, 2);
  std::vector<int> labels;
  std::vector<double> response;

  for (std::size_t i = 0; i < per_class; ++i) {
    features(i, 0) = 2.0 + blob_sd * rng.normal();
    features(i, 1) = blob_sd * rng.normal();
    labels.push_back(1);
    response.push_back(1.0);
  }
  for (std::size_t i = 0; i < per_class; ++i) {
    features(per_class + i, 0) = -2.0 + blob_sd * rng.normal();
    features(per_class + i, 1) = blob_sd * rng.normal();
    labels.push_back(-1);
    response.push_back(-1.0);
  }
  // tight cluster well inside the negative class, labels flipped to +1
  for (std::size_t i = 0; i < cluster_size; ++i) {
    const std::size_t idx = 2 * per_class + i;
    features(idx, 0) = -2.2 + cluster_sd * rng.normal();
    features(idx, 1) = 0.4 + cluster_sd * rng.normal();
    labels.push_back(1);
    response.push_back(-1.0);
    sc.cluster_members.push_back(idx);
  }

  sc.data.features = std::move(features);
  sc.data.labels = std::move(labels);
  sc.data.split = sc.data.rows();
  sc.data.response = response;

  sc.record.flipped.assign(sc.data.rows(), 0);
  sc.record.original_response = response;
  sc.record.true_anomaly_score.resize(sc.data.rows());
  for (std::size_t i = 0; i < sc.data.rows(); ++i)
    sc.record.true_anomaly_score[i] = std::abs(response[i] - sc.data.labels[i]);
  for (auto i : sc.cluster_members) {
    sc.record.flipped[i] = 1;
    sc.record.flipped_indices.push_back(i);
  }
  return sc;
}

}  // namespace softhad
