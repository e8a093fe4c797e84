#include <doctest.h>

#include <cmath>

#include "softhad/baseline.hpp"
#include "softhad/stats.hpp"

using namespace softhad;

namespace {

KnnModel make_model(const std::vector<std::vector<double>>& refs,
                    const std::vector<int>& labels, std::size_t k, double sigma) {
  KnnModel m;
  for (const auto& r : refs) m.references.append_row(r);
  m.labels = labels;
  m.k = k;
  m.psi.psi.assign(refs.front().size(), 1.0);
  m.sigma = sigma;
  return m;
}

}  // namespace

TEST_CASE("knn_soft_label") {
  SUBCASE("unanimous +1 neighborhood votes 1") {
    auto m = make_model({{0.0}, {0.1}, {-0.1}}, {1, 1, 1}, 3, 1.0);
    std::vector<double> q{0.0};
    CHECK(knn_soft_label(m, q) == doctest::Approx(1.0));
  }
  SUBCASE("equidistant opposite neighbors cancel") {
    auto m = make_model({{1.0}, {-1.0}}, {1, -1}, 2, 1.0);
    std::vector<double> q{0.0};
    CHECK(knn_soft_label(m, q) == doctest::Approx(0.0));
  }
  SUBCASE("weights (0.8, 0.2) with labels (+1, -1) vote 0.6") {
    // choose distances so exp(-d2/s2) gives exactly 0.8 and 0.2
    const double s = 1.0;
    const double d_pos = std::sqrt(-std::log(0.8));
    const double d_neg = std::sqrt(-std::log(0.2));
    auto m = make_model({{d_pos}, {-d_neg}}, {1, -1}, 2, s);
    std::vector<double> q{0.0};
    CHECK(knn_soft_label(m, q) == doctest::Approx(0.6));
  }
  SUBCASE("all weights underflowing gives 0") {
    auto m = make_model({{1e6}, {-1e6}}, {1, -1}, 2, 1.0);
    std::vector<double> q{0.0};
    CHECK(knn_soft_label(m, q) == doctest::Approx(0.0));
  }
  SUBCASE("soft label stays in [-1, 1] and flips with labels") {
    Rng rng(3);
    std::vector<std::vector<double>> refs;
    std::vector<int> labels, negated;
    for (int i = 0; i < 30; ++i) {
      refs.push_back({rng.normal(), rng.normal()});
      labels.push_back(rng.below(2) ? 1 : -1);
      negated.push_back(-labels.back());
    }
    auto m = make_model(refs, labels, 5, 1.0);
    auto mn = make_model(refs, negated, 5, 1.0);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> q{rng.normal(), rng.normal()};
      const double v = knn_soft_label(m, q);
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
      CHECK(knn_soft_label(mn, q) == doctest::Approx(-v));
    }
  }
  SUBCASE("leave-one-out exclusion skips the reference itself") {
    auto m = make_model({{0.0}, {5.0}, {5.1}}, {1, -1, -1}, 2, 10.0);
    // scoring reference 0 against the rest must not see its own +1 label
    const double v = knn_soft_label(m, m.references.row(0), 0);
    CHECK(v < 0.0);
  }
}

TEST_CASE("knn_anomaly_score") {
  auto m = make_model({{0.0}, {0.1}}, {1, 1}, 2, 1.0);
  std::vector<double> q{0.0};
  SUBCASE("unanimous neighborhood, opposite observation: score 2") {
    CHECK(knn_anomaly_score(m, q, -1) == doctest::Approx(2.0));
  }
  SUBCASE("uniform neighborhood agreeing: score 0") {
    CHECK(knn_anomaly_score(m, q, 1) == doctest::Approx(0.0));
  }
  SUBCASE("no-evidence midpoint scores 1") {
    auto far = make_model({{1e6}}, {1}, 1, 1.0);
    CHECK(knn_anomaly_score(far, q, 1) == doctest::Approx(1.0));
    CHECK(knn_anomaly_score(far, q, -1) == doctest::Approx(1.0));
  }
  SUBCASE("soft label 0.6 observed +1 scores 0.4") {
    const double d_pos = std::sqrt(-std::log(0.8));
    const double d_neg = std::sqrt(-std::log(0.2));
    auto m2 = make_model({{d_pos}, {-d_neg}}, {1, -1}, 2, 1.0);
    CHECK(knn_anomaly_score(m2, q, 1) == doctest::Approx(0.4));
  }
  SUBCASE("invalid observed label") {
    CHECK_THROWS(knn_anomaly_score(m, q, 0));
  }
}
