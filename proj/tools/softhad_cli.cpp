#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numeric>
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

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

softhad::SigmaChoice parse_sigma(const std::string& s) {
  softhad::SigmaChoice c;
  if (s == "auto" || s == "auto-var2") {
    c.mode = softhad::SigmaMode::kVarianceSq;
  } else if (s == "auto-var") {
    c.mode = softhad::SigmaMode::kVariance;
  } else {
    c.mode = softhad::SigmaMode::kFixed;
    c.fixed_value = std::stod(s);
  }
  return c;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw std::runtime_error("cli: empty list value");
  return out;
}

struct CommonFlags {
  std::string input, recent, label_col, response_col, out = "softhad_report";
  std::string sigma = "auto", mode = "withheld", mult_weighting = "on";
  std::size_t k_graph = 75;
  double c_l = 1.0, c_u = -1.0, gamma_g = 1.0;
  std::size_t backbone_k = 0;  // 0 = auto
  double flip_frac = 0.03;
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

json config_echo(const CommonFlags& f, double sigma_used, std::size_t backbone_k) {
  return json{{"artifact_version", "1.0.0"},
              {"input", f.input},
              {"recent", f.recent},
              {"label_col", f.label_col},
              {"response_col", f.response_col},
              {"k_graph", f.k_graph},
              {"c_l", f.c_l},
              {"c_u", f.c_u < 0 ? f.c_l : f.c_u},
              {"gamma_g", f.gamma_g},
              {"backbone_k", backbone_k},
              {"sigma_flag", f.sigma},
              {"sigma_used", sigma_used},
              {"mode", f.mode},
              {"flip_frac", f.flip_frac},
              {"runs", f.runs},
              {"seed", f.seed},
              {"multiplicity_weighting", f.mult_weighting}};
}

softhad::HarmonicConfig harmonic_config(const CommonFlags& f) {
  softhad::HarmonicConfig cfg;
  cfg.c_l = f.c_l;
  cfg.c_u = f.c_u < 0 ? f.c_l : f.c_u;
  cfg.gamma_g = f.gamma_g;
  return cfg;
}

int cmd_score(const CommonFlags& f) {
  softhad::CsvOptions opt;
  opt.label_column = f.label_col;
  opt.response_column = f.response_col;
  softhad::Dataset train = softhad::load_csv(f.input, opt);
  softhad::Dataset recent = softhad::load_csv(f.recent, opt, train.stats);

  const softhad::FeatureWeights psi = softhad::wilcoxon_weights(train);
  const auto sigma_choice = parse_sigma(f.sigma);
  const double sigma = softhad::choose_sigma(train, psi, sigma_choice, 100000,
                                             softhad::mix_seed(f.seed, 3));

  const std::size_t bk = f.backbone_k
                             ? std::min(f.backbone_k, train.rows())
                             : std::min<std::size_t>(train.rows(), 1000);
  softhad::BackboneGraph bb = softhad::quantize(train, bk, psi, false,
                                                softhad::mix_seed(f.seed, 4),
                                                f.threads);
  const std::size_t gk = std::min(f.k_graph, bb.size() - 1);
  softhad::backbone_graph(bb, gk, sigma, psi, f.threads);

  softhad::ScoreOptions opts;
  opts.mode = f.mode == "included" ? softhad::ScoringMode::kIncluded
                                   : softhad::ScoringMode::kWithheld;
  opts.graph_k = gk;
  opts.psi = psi;
  opts.multiplicity_weighting = f.mult_weighting == "on";
  opts.threads = f.threads;

  const softhad::AnomalyReport report = softhad::score_recent(
      bb, recent.features, recent.labels, harmonic_config(f), opts);

  softhad::write_report_csv(report, f.out + ".csv");
  softhad::write_report_json(report, harmonic_config(f),
                             config_echo(f, sigma, bk).dump(), f.out + ".json");
  std::cout << "scored " << recent.rows() << " recent instances -> " << f.out
            << ".csv\n";
  return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& gamma_list,
             const std::string& backbone_list) {
  softhad::CsvOptions opt;
  opt.label_column = f.label_col;
  opt.response_column = f.response_col;
  if (f.response_col.empty())
    throw std::runtime_error("cli: eval requires --response-col");
  softhad::Dataset data = softhad::load_csv(f.input, opt);

  const auto gammas = parse_list(gamma_list);
  std::vector<std::size_t> sizes;
  if (backbone_list.empty()) {
    sizes.push_back(f.backbone_k ? f.backbone_k : 200);
  } else {
    for (double v : parse_list(backbone_list))
      sizes.push_back(static_cast<std::size_t>(v));
  }

  std::ofstream csv(f.out + ".csv");
  if (!csv) throw std::runtime_error("cli: cannot write " + f.out + ".csv");
  csv << "method,gamma_g,backbone_k,metric,mean,variance\n";

  json runs_json = json::array();
  for (double gamma : gammas) {
    for (std::size_t bk : sizes) {
      softhad::ExperimentSpec spec;
      spec.data = data;
      spec.response = data.response;
      spec.flip_fraction = f.flip_frac;
      spec.runs = f.runs;
      spec.seed = f.seed;
      spec.cfg = harmonic_config(f);
      spec.cfg.gamma_g = gamma;
      spec.graph_k = f.k_graph;
      spec.backbone_k = bk;
      spec.sigma = parse_sigma(f.sigma);
      spec.mode = f.mode == "included" ? softhad::ScoringMode::kIncluded
                                       : softhad::ScoringMode::kWithheld;
      spec.multiplicity_weighting = f.mult_weighting == "on";
      spec.threads = f.threads;

      const softhad::MetricSummary s = softhad::run_experiment(spec);
      auto emit = [&](const char* method, const softhad::MethodMetrics& m) {
        csv << method << "," << fmt(gamma) << "," << bk << ",flip_auc,"
            << fmt(m.mean_flip_auc) << "," << fmt(m.var_flip_auc) << "\n";
        csv << method << "," << fmt(gamma) << "," << bk << ",concordance,"
            << fmt(m.mean_concordance) << "," << fmt(m.var_concordance) << "\n";
      };
      emit("softhad", s.softhad);
      emit("wknn", s.wknn);
      runs_json.push_back({{"gamma_g", gamma},
                           {"backbone_k", bk},
                           {"softhad_flip_auc", s.softhad.mean_flip_auc},
                           {"softhad_concordance", s.softhad.mean_concordance},
                           {"wknn_flip_auc", s.wknn.mean_flip_auc},
                           {"wknn_concordance", s.wknn.mean_concordance}});
    }
  }

  json doc;
  doc["provenance"] = config_echo(f, 0.0, sizes.front());
  doc["gamma_grid"] = gammas;
  doc["backbone_grid"] = sizes;
  doc["results"] = runs_json;
  std::ofstream js(f.out + ".json");
  js << doc.dump(2) << "\n";
  std::cout << "wrote " << f.out << ".csv\n";
  return 0;
}

int cmd_graph(const CommonFlags& f) {
  softhad::CsvOptions opt;
  opt.label_column = f.label_col;
  opt.response_column = f.response_col;
  softhad::Dataset data = softhad::load_csv(f.input, opt);

  const softhad::FeatureWeights psi = softhad::wilcoxon_weights(data);
  const auto sigma_choice = parse_sigma(f.sigma);
  const double sigma = softhad::choose_sigma(data, psi, sigma_choice, 100000,
                                             softhad::mix_seed(f.seed, 3));

  softhad::SimilarityGraph graph;
  if (f.backbone_k && f.backbone_k < data.rows()) {
    softhad::BackboneGraph bb = softhad::quantize(
        data, f.backbone_k, psi, false, softhad::mix_seed(f.seed, 4), f.threads);
    softhad::backbone_graph(bb, std::min(f.k_graph, bb.size() - 1), sigma, psi,
                            f.threads);
    graph = bb.graph;
  } else {
    graph = softhad::build_knn_graph(data, psi,
                                     std::min(f.k_graph, data.rows() - 1), sigma,
                                     f.threads);
  }
  softhad::save_edge_list(graph, f.out);
  std::cout << "wrote " << f.out << " (" << graph.node_count << " nodes)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional anomaly detection via soft harmonic functions"};
  app.require_subcommand(1);

  CommonFlags f;
  std::string gamma_list = "1", backbone_list;

  auto add_common = [&](CLI::App* cmd, bool needs_recent) {
    cmd->add_option("--input", f.input, "training CSV")->required();
    if (needs_recent)
      cmd->add_option("--recent", f.recent, "recent-instances CSV")->required();
    cmd->add_option("--label-col", f.label_col, "label column name");
    cmd->add_option("--response-col", f.response_col,
                    "ordinal response column (scaled to [-1,1], label = y_r >= 0)");
    cmd->add_option("--k-graph", f.k_graph, "graph k (default 75)");
    cmd->add_option("--cl", f.c_l, "empirical weight c_l (default 1)");
    cmd->add_option("--cu", f.c_u, "empirical weight c_u (default = c_l)");
    cmd->add_option("--gamma-g", f.gamma_g, "Laplacian regularizer (default 1)");
    cmd->add_option("--backbone-k", f.backbone_k, "quantization size (0 = auto)");
    cmd->add_option("--sigma", f.sigma, "auto | auto-var | <value>");
    cmd->add_option("--mode", f.mode, "withheld | included")
        ->check(CLI::IsMember({"withheld", "included"}));
    cmd->add_option("--seed", f.seed, "root seed");
    cmd->add_option("--threads", f.threads, "worker cap (0 = hardware)");
    cmd->add_option("--out", f.out, "output path / prefix");
    cmd->add_option("--multiplicity-weighting", f.mult_weighting, "on | off")
        ->check(CLI::IsMember({"on", "off"}));
  };

  CLI::App* score = app.add_subcommand("score", "score recent instances");
  add_common(score, true);

  CLI::App* eval = app.add_subcommand("eval", "flip-injection evaluation protocol");
  add_common(eval, false);
  eval->add_option("--flip-frac", f.flip_frac, "label-flip fraction (default 0.03)");
  eval->add_option("--runs", f.runs, "number of runs (default 100)");
  eval->add_option("--gamma-g-grid", gamma_list, "comma-separated gamma_g sweep");
  eval->add_option("--backbone-k-grid", backbone_list, "comma-separated size sweep");

  CLI::App* graph = app.add_subcommand("graph", "export the similarity graph");
  add_common(graph, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (score->parsed()) return cmd_score(f);
    if (eval->parsed()) return cmd_eval(f, gamma_list, backbone_list);
    if (graph->parsed()) return cmd_graph(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
