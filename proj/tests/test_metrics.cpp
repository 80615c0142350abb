#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dslfiqa/core/rng.hpp"
#include "dslfiqa/metrics/metrics.hpp"
#include "test_util.hpp"

using namespace dslfiqa;
using metrics::ScorePairs;

TEST_CASE("plcc") {
  SUBCASE("perfect correlation and anticorrelation") {
    ScorePairs same{{0.1, 0.4, 0.7, 0.9}, {0.1, 0.4, 0.7, 0.9}};
    CHECK(metrics::plcc(same) == doctest::Approx(1.0).epsilon(1e-12));
    ScorePairs anti{{0.1, 0.4, 0.7, 0.9}, {0.9, 0.6, 0.3, 0.1}};
    CHECK(metrics::plcc(anti) == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("matches the covariance oracle") {
    const ScorePairs p{{1, 2, 3, 4}, {1.1, 1.9, 3.2, 3.8}};
    // direct formula
    const double mu_a = 2.5, mu_b = (1.1 + 1.9 + 3.2 + 3.8) / 4.0;
    double cov = 0, va = 0, vb = 0;
    for (int i = 0; i < 4; ++i) {
      cov += (p.actual[static_cast<size_t>(i)] - mu_a) * (p.predicted[static_cast<size_t>(i)] - mu_b);
      va += (p.actual[static_cast<size_t>(i)] - mu_a) * (p.actual[static_cast<size_t>(i)] - mu_a);
      vb += (p.predicted[static_cast<size_t>(i)] - mu_b) * (p.predicted[static_cast<size_t>(i)] - mu_b);
    }
    CHECK(std::abs(metrics::plcc(p) - cov / std::sqrt(va * vb)) < 1e-12);
  }
  SUBCASE("affine invariance and swap symmetry") {
    Rng rng(3);
    ScorePairs p;
    for (int i = 0; i < 40; ++i) {
      p.actual.push_back(rng.uniform());
      p.predicted.push_back(rng.uniform());
    }
    const double base = metrics::plcc(p);
    ScorePairs scaled = p;
    for (auto& v : scaled.predicted) v = 3.7 * v + 0.2;
    CHECK(std::abs(metrics::plcc(scaled) - base) < 1e-10);
    ScorePairs swapped{p.predicted, p.actual};
    CHECK(std::abs(metrics::plcc(swapped) - base) < 1e-12);
  }
  SUBCASE("zero variance throws") {
    ScorePairs flat{{0.5, 0.5, 0.5}, {0.1, 0.2, 0.3}};
    CHECK_THROWS_AS((void)metrics::plcc(flat), Error);
  }
}

TEST_CASE("srcc") {
  SUBCASE("invariant under strictly increasing transforms") {
    Rng rng(5);
    ScorePairs p;
    for (int i = 0; i < 30; ++i) {
      p.actual.push_back(rng.uniform());
      p.predicted.push_back(rng.uniform());
    }
    const double base = metrics::srcc(p);
    ScorePairs warped = p;
    for (auto& v : warped.predicted) v = std::exp(3.0 * v);
    CHECK(std::abs(metrics::srcc(warped) - base) < 1e-10);

    ScorePairs self{p.actual, p.actual};
    for (auto& v : self.predicted) v = v * v * v + 2.0 * v;
    CHECK(metrics::srcc(self) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("reversed ranks of three items give exactly -1") {
    ScorePairs p{{1, 2, 3}, {3, 2, 1}};
    // d^2 sums to 8: 1 - 48/24 = -1
    CHECK(metrics::srcc(p) == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("no-ties case reduces to the rank-difference formula") {
    Rng rng(7);
    ScorePairs p;
    for (int i = 0; i < 25; ++i) {
      p.actual.push_back(rng.uniform());
      p.predicted.push_back(rng.uniform());
    }
    const auto ra = metrics::average_ranks(p.actual);
    const auto rb = metrics::average_ranks(p.predicted);
    double d2 = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    const double n = static_cast<double>(ra.size());
    CHECK(std::abs(metrics::srcc(p) - (1.0 - 6.0 * d2 / (n * (n * n - 1)))) < 1e-12);
  }
  SUBCASE("tied instance matches the average-rank oracle") {
    const ScorePairs p{{1, 2, 2, 3}, {4, 3, 3, 1}};
    // average ranks: actual (1, 2.5, 2.5, 4), predicted (4, 2.5, 2.5, 1)
    const std::vector<double> ra{1.0, 2.5, 2.5, 4.0}, rb{4.0, 2.5, 2.5, 1.0};
    double cov = 0, va = 0, vb = 0;
    for (int i = 0; i < 4; ++i) {
      cov += (ra[static_cast<size_t>(i)] - 2.5) * (rb[static_cast<size_t>(i)] - 2.5);
      va += (ra[static_cast<size_t>(i)] - 2.5) * (ra[static_cast<size_t>(i)] - 2.5);
      vb += (rb[static_cast<size_t>(i)] - 2.5) * (rb[static_cast<size_t>(i)] - 2.5);
    }
    CHECK(std::abs(metrics::srcc(p) - cov / std::sqrt(va * vb)) < 1e-12);
  }
}

TEST_CASE("average precision") {
  const std::vector<std::string> all_good{"a", "a", "a", "a", "a"};
  CHECK(metrics::average_precision("a", all_good, 5) == doctest::Approx(1.0));
  const std::vector<std::string> none{"b", "c", "b", "d", "e"};
  CHECK(metrics::average_precision("a", none, 5) == doctest::Approx(0.0));
  // hits at ranks 1, 3, 5: (1/5)(1 + 2/3 + 3/5)
  const std::vector<std::string> mixed{"a", "b", "a", "b", "a"};
  CHECK(metrics::average_precision("a", mixed, 5) ==
        doctest::Approx((1.0 + 2.0 / 3.0 + 3.0 / 5.0) / 5.0).epsilon(1e-12));
}

TEST_CASE("retrieval experiment") {
  SUBCASE("one-hot oracle encoder achieves perfect mAP") {
    const int families = 4, per_family = 6;
    Eigen::MatrixXf gallery(families * per_family, families);
    std::vector<std::string> labels;
    gallery.setZero();
    for (int f = 0; f < families; ++f)
      for (int i = 0; i < per_family; ++i) {
        gallery(f * per_family + i, f) = 1.0f;
        labels.push_back("fam" + std::to_string(f));
      }
    const auto result = metrics::retrieval_experiment(gallery, labels, gallery, labels, 5);
    CHECK(result.map == doctest::Approx(1.0));
    for (const auto& q : result.per_query) CHECK(q.retrieved_labels.size() == 5);
  }
  SUBCASE("random representations sit near chance for balanced labels") {
    Rng rng(11);
    const int families = 6, gallery_n = 300, query_n = 300;
    Eigen::MatrixXf gallery(gallery_n, 16), queries(query_n, 16);
    std::vector<std::string> glabels, qlabels;
    for (int i = 0; i < gallery_n; ++i) {
      for (int d = 0; d < 16; ++d) gallery(i, d) = static_cast<float>(rng.normal());
      glabels.push_back("fam" + std::to_string(i % families));
    }
    for (int i = 0; i < query_n; ++i) {
      for (int d = 0; d < 16; ++d) queries(i, d) = static_cast<float>(rng.normal());
      qlabels.push_back("fam" + std::to_string(i % families));
    }
    const auto result = metrics::retrieval_experiment(queries, qlabels, gallery, glabels, 5);
    CHECK(result.map > 1.0 / 6.0 - 0.1);
    CHECK(result.map < 1.0 / 6.0 + 0.1);
  }
  SUBCASE("ties break by gallery index") {
    Eigen::MatrixXf gallery = Eigen::MatrixXf::Zero(4, 3);  // all identical -> all tied
    const std::vector<std::string> glabels{"w", "x", "y", "z"};
    Eigen::MatrixXf query = Eigen::MatrixXf::Zero(1, 3);
    const auto result = metrics::retrieval_experiment(query, {"x"}, gallery, glabels, 4);
    REQUIRE(result.per_query.size() == 1);
    CHECK(result.per_query[0].retrieved_labels == std::vector<std::string>{"w", "x", "y", "z"});
  }
  SUBCASE("an always-wrong query strictly lowers mAP") {
    Eigen::MatrixXf gallery = Eigen::MatrixXf::Identity(3, 3);
    const std::vector<std::string> glabels{"a", "b", "c"};
    Eigen::MatrixXf good(1, 3);
    good << 1, 0, 0;
    const double before = metrics::retrieval_experiment(good, {"a"}, gallery, glabels, 2).map;
    Eigen::MatrixXf with_bad(2, 3);
    with_bad << 1, 0, 0, 1, 0, 0;
    const double after = metrics::retrieval_experiment(with_bad, {"a", "zzz"}, gallery, glabels, 2).map;
    CHECK(after < before);
  }
  SUBCASE("empty gallery throws") {
    CHECK_THROWS_AS(
        (void)metrics::retrieval_experiment(Eigen::MatrixXf::Zero(1, 3), {"a"}, Eigen::MatrixXf(0, 3), {}, 5), Error);
  }
}
