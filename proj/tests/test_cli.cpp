#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "softhad/graph.hpp"

namespace {

std::string cli_path() {
  const char* p = std::getenv("SOFTHAD_CLI");
  REQUIRE_MESSAGE(p != nullptr, "SOFTHAD_CLI not set");
  return p;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>/tmp/softhad_cli_err.txt";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string stderr_text() {
  std::ifstream in("/tmp/softhad_cli_err.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_small_csv(const std::string& path, std::size_t rows) {
  std::ofstream out(path);
  out << "x,y,cls\n";
  for (std::size_t i = 0; i < rows; ++i) {
    const bool pos = i % 2 == 0;
    out << (pos ? 1.0 : -1.0) + 0.05 * static_cast<double>(i) << ","
        << 0.03 * static_cast<double>(i % 7) << "," << (pos ? 1 : -1) << "\n";
  }
}

}  // namespace

TEST_CASE("cli: usage errors exit 2") {
  CHECK(run("bogus-subcommand") == 2);
  CHECK(run("score") == 2);  // missing required flags
}

TEST_CASE("cli: missing label column exits nonzero and names the column") {
  write_small_csv("/tmp/softhad_cli_train.csv", 30);
  const int rc = run(
      "score --input /tmp/softhad_cli_train.csv --recent /tmp/softhad_cli_train.csv "
      "--label-col missing_col --out /tmp/softhad_cli_rep");
  CHECK(rc == 1);
  CHECK(stderr_text().find("missing_col") != std::string::npos);
}

TEST_CASE("cli: score writes reports and echoes the defaults") {
  write_small_csv("/tmp/softhad_cli_train.csv", 60);
  write_small_csv("/tmp/softhad_cli_recent.csv", 10);
  const int rc = run(
      "score --input /tmp/softhad_cli_train.csv --recent /tmp/softhad_cli_recent.csv "
      "--label-col cls --sigma 1.0 --out /tmp/softhad_cli_rep");
  REQUIRE(rc == 0);

  std::ifstream js("/tmp/softhad_cli_rep.json");
  REQUIRE(js.good());
  const auto doc = nlohmann::json::parse(js);
  CHECK(doc["provenance"]["k_graph"] == 75);
  CHECK(doc["provenance"]["c_l"] == 1.0);
  CHECK(doc["provenance"]["gamma_g"] == 1.0);

  std::ifstream csv("/tmp/softhad_cli_rep.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "node_id,raw_score,scaled_score");
}

TEST_CASE("cli: graph export round-trips through the edge-list format") {
  write_small_csv("/tmp/softhad_cli_train.csv", 40);
  const int rc = run(
      "graph --input /tmp/softhad_cli_train.csv --label-col cls --k-graph 5 "
      "--sigma 1.0 --out /tmp/softhad_cli_graph.txt");
  REQUIRE(rc == 0);
  auto g = softhad::load_edge_list("/tmp/softhad_cli_graph.txt");
  CHECK(g.node_count == 40);
  softhad::save_edge_list(g, "/tmp/softhad_cli_graph2.txt");
  auto g2 = softhad::load_edge_list("/tmp/softhad_cli_graph2.txt");
  for (std::size_t i = 0; i < g.node_count; ++i)
    CHECK(g.neighbors[i] == g2.neighbors[i]);
}

TEST_CASE("cli: 2-instance dataset exports a single edge") {
  std::ofstream out("/tmp/softhad_cli_two.csv");
  out << "x,cls\n0,1\n1,-1\n";
  out.close();
  const int rc = run(
      "graph --input /tmp/softhad_cli_two.csv --label-col cls --k-graph 1 "
      "--sigma 1.0 --out /tmp/softhad_cli_two_graph.txt");
  REQUIRE(rc == 0);
  auto g = softhad::load_edge_list("/tmp/softhad_cli_two_graph.txt");
  CHECK(g.node_count == 2);
  CHECK(g.neighbors[0].size() == 1);
}
