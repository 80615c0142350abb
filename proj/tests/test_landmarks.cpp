#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "dslfiqa/core/rng.hpp"
#include "dslfiqa/data/toy_faces.hpp"
#include "dslfiqa/landmarks/landmarks.hpp"

using namespace dslfiqa;

TEST_CASE("encode_landmark_id") {
  SUBCASE("id zero alternates sin(0)=0, cos(0)=1") {
    const auto enc = lm::encode_landmark_id(0, 68, 4);
    REQUIRE(enc.size() == 8);
    for (int f = 0; f < 4; ++f) {
      CHECK(enc(2 * f) == doctest::Approx(0.0));
      CHECK(enc(2 * f + 1) == doctest::Approx(1.0));
    }
  }
  SUBCASE("id = L/2 with one band gives [1, 0]") {
    const auto enc = lm::encode_landmark_id(34, 68, 1);
    REQUIRE(enc.size() == 2);
    CHECK(enc(0) == doctest::Approx(1.0));
    CHECK(enc(1) == doctest::Approx(0.0).epsilon(1e-6));
  }
  SUBCASE("entries stay in [-1, 1]") {
    for (int id = 0; id < 68; ++id) {
      const auto enc = lm::encode_landmark_id(id, 68, 6);
      CHECK(enc.minCoeff() >= -1.0f);
      CHECK(enc.maxCoeff() <= 1.0f);
    }
  }
  SUBCASE("pairwise distinct over the desk vocabulary") {
    std::vector<Eigen::VectorXf> encs;
    for (int id = 0; id < 68; ++id) encs.push_back(lm::encode_landmark_id(id, 68, 6));
    for (int a = 0; a < 68; ++a)
      for (int b = a + 1; b < 68; ++b) CHECK((encs[a] - encs[b]).cwiseAbs().maxCoeff() > 1e-6f);
  }
  SUBCASE("injective over the full 1313-point vocabulary") {
    const int vocab = 1313;
    std::vector<Eigen::VectorXf> encs;
    encs.reserve(vocab);
    for (int id = 0; id < vocab; ++id) encs.push_back(lm::encode_landmark_id(id, vocab, 6));
    for (int a = 0; a < vocab; ++a)
      for (int b = a + 1; b < vocab; ++b)
        if ((encs[a] - encs[b]).cwiseAbs().maxCoeff() == 0.0f) FAIL("collision between ", a, " and ", b);
  }
  SUBCASE("out-of-range ids throw") {
    CHECK_THROWS_AS((void)lm::encode_landmark_id(-1, 68, 6), Error);
    CHECK_THROWS_AS((void)lm::encode_landmark_id(68, 68, 6), Error);
  }
}

TEST_CASE("landmarks_in_patch") {
  lm::LandmarkSet set;
  set.vocab = 68;
  Rng rng(13);
  for (int id = 0; id < 68; ++id)
    set.entries.push_back({id, static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform())});

  SUBCASE("full-image patch is the identity subset") {
    const auto sub = lm::landmarks_in_patch(set, {0, 0, 100, 80}, 80, 100);
    REQUIRE(sub.entries.size() == set.entries.size());
    for (size_t i = 0; i < sub.entries.size(); ++i) {
      CHECK(sub.entries[i].id == set.entries[i].id);
      CHECK(sub.entries[i].x == doctest::Approx(set.entries[i].x).epsilon(1e-6));
      CHECK(sub.entries[i].y == doctest::Approx(set.entries[i].y).epsilon(1e-6));
    }
  }
  SUBCASE("empty patches are valid") {
    lm::LandmarkSet corner;
    corner.vocab = 68;
    corner.entries = {{0, 0.9f, 0.9f}};
    const auto sub = lm::landmarks_in_patch(corner, {0, 0, 10, 10}, 100, 100);
    CHECK(sub.entries.empty());
  }
  SUBCASE("matches a point-in-rectangle loop oracle") {
    for (int trial = 0; trial < 50; ++trial) {
      const int w = 20 + static_cast<int>(rng.uniform_int(0, 60));
      const int h = 20 + static_cast<int>(rng.uniform_int(0, 60));
      const int x0 = static_cast<int>(rng.uniform_int(0, 100 - w));
      const int y0 = static_cast<int>(rng.uniform_int(0, 100 - h));
      const auto sub = lm::landmarks_in_patch(set, {x0, y0, w, h}, 100, 100);
      size_t expect = 0;
      for (const auto& e : set.entries) {
        const float px = e.x * 99.0f, py = e.y * 99.0f;
        if (px >= x0 && px <= x0 + w - 1 && py >= y0 && py <= y0 + h - 1) ++expect;
      }
      CHECK(sub.entries.size() == expect);
      for (const auto& e : sub.entries) {
        CHECK(e.x >= 0.0f);
        CHECK(e.x <= 1.0f);
        CHECK(e.y >= 0.0f);
        CHECK(e.y <= 1.0f);
      }
    }
  }
  SUBCASE("ids survive cropping (stability guarantee)") {
    const auto sub = lm::landmarks_in_patch(set, {10, 10, 50, 50}, 100, 100);
    for (const auto& e : sub.entries)
      CHECK(lm::encode_landmark_id(e.id, 68, 6) == lm::encode_landmark_id(e.id, 68, 6));
  }
  SUBCASE("out-of-bounds rect throws") {
    CHECK_THROWS_AS((void)lm::landmarks_in_patch(set, {90, 0, 20, 20}, 100, 100), Error);
    CHECK_THROWS_AS((void)lm::landmarks_in_patch(set, {0, 0, 0, 5}, 100, 100), Error);
  }
}

TEST_CASE("synthetic landmark provider") {
  const auto spec = data::sample_face_spec(99);
  const auto a = data::synthetic_landmark_provider(spec, 96, 96);
  const auto b = data::synthetic_landmark_provider(spec, 96, 96);

  SUBCASE("deterministic") {
    REQUIRE(a.entries.size() == b.entries.size());
    for (size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(a.entries[i].id == b.entries[i].id);
      CHECK(a.entries[i].x == b.entries[i].x);
    }
  }
  SUBCASE("all 68 ids present exactly once") {
    REQUIRE(a.entries.size() == 68);
    CHECK(a.ids_unique());
  }
  SUBCASE("eye landmarks straddle the face midline") {
    float left_max = -1.0f, right_min = 2.0f;
    for (const auto& e : a.entries) {
      if (e.id >= 36 && e.id <= 41) left_max = std::max(left_max, e.x);
      if (e.id >= 42 && e.id <= 47) right_min = std::min(right_min, e.x);
    }
    CHECK(left_max < spec.cx);
    CHECK(right_min > spec.cx);
  }
}

TEST_CASE("pool_landmark_encoding") {
  SUBCASE("empty set maps to the zero vector") {
    const auto pooled = lm::pool_landmark_encoding(lm::LandmarkSet{}, 68, 6);
    REQUIRE(pooled.size() == 14);
    CHECK(pooled.cwiseAbs().maxCoeff() == 0.0f);
  }
  SUBCASE("single landmark is passed through verbatim") {
    lm::LandmarkSet one;
    one.entries = {{17, 0.25f, 0.75f}};
    const auto pooled = lm::pool_landmark_encoding(one, 68, 6);
    const auto enc = lm::encode_landmark_id(17, 68, 6);
    for (int i = 0; i < 12; ++i) CHECK(pooled(i) == doctest::Approx(enc(i)));
    CHECK(pooled(12) == doctest::Approx(0.25f));
    CHECK(pooled(13) == doctest::Approx(0.75f));
  }
  SUBCASE("matches an elementwise mean oracle") {
    Rng rng(7);
    lm::LandmarkSet many;
    for (int i = 0; i < 9; ++i)
      many.entries.push_back({i * 7 % 68, static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform())});
    const auto pooled = lm::pool_landmark_encoding(many, 68, 6);
    Eigen::VectorXd want = Eigen::VectorXd::Zero(14);
    for (const auto& e : many.entries) {
      const auto enc = lm::encode_landmark_id(e.id, 68, 6);
      for (int i = 0; i < 12; ++i) want(i) += enc(i);
      want(12) += e.x;
      want(13) += e.y;
    }
    want /= 9.0;
    for (int i = 0; i < 14; ++i) CHECK(std::abs(pooled(i) - want(i)) < 1e-6);
  }
}

TEST_CASE("landmark file round trip") {
  namespace fs = std::filesystem;
  const std::string path = "tmp_landmarks.jsonl";
  const auto spec = data::sample_face_spec(5);
  std::vector<std::pair<std::string, lm::LandmarkSet>> sets;
  sets.emplace_back("a.png", data::synthetic_landmark_provider(spec, 64, 64));
  sets.emplace_back("b.png", lm::LandmarkSet{});
  lm::write_landmark_file(path, sets);
  const auto back = lm::read_landmark_file(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].first == "a.png");
  REQUIRE(back[0].second.entries.size() == 68);
  for (size_t i = 0; i < 68; ++i) {
    CHECK(back[0].second.entries[i].id == sets[0].second.entries[i].id);
    CHECK(back[0].second.entries[i].x == doctest::Approx(sets[0].second.entries[i].x));
  }
  CHECK(back[1].second.entries.empty());
  fs::remove(path);
}
