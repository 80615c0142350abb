#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "dslfiqa/data/toy_faces.hpp"
#include "dslfiqa/degrade/degrade.hpp"
#include "dslfiqa/io/image_io.hpp"

using namespace dslfiqa;
using degrade::Family;

namespace {

Image checkerboard(int side, int cell) {
  Image img(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const float v = ((x / cell + y / cell) % 2 == 0) ? 1.0f : 0.0f;
      img.r(y, x) = v;
      img.g(y, x) = v;
      img.b(y, x) = v;
    }
  return img;
}

}  // namespace

TEST_CASE("family names round trip") {
  for (const Family f : degrade::all_families()) CHECK(degrade::family_from_name(degrade::family_name(f)) == f);
  CHECK_THROWS_AS((void)degrade::family_from_name("vignette"), Error);
  CHECK(degrade::degrading_families().size() == 15);
}

TEST_CASE("apply_degradation basics") {
  const Image face = data::render_face(data::sample_face_spec(3), 64, 64);

  SUBCASE("clean recipe is the identity") {
    degrade::DegradationRecipe clean;
    clean.family = Family::kClean;
    clean.seed = 9;
    CHECK(degrade::apply_degradation(face, clean).same_pixels(face));
  }
  SUBCASE("gaussian blur of a constant image is that constant") {
    Image flat(64, 64);
    flat.fill(0.5f, 0.5f, 0.5f);
    degrade::DegradationRecipe r;
    r.family = Family::kGaussianBlur;
    r.params = {{"kernel", 31.0}, {"sigma", 5.0}};
    r.seed = 1;
    const Image out = degrade::apply_degradation(flat, r);
    CHECK((out.r - 0.5f).abs().maxCoeff() < 1e-5f);
    CHECK((out.g - 0.5f).abs().maxCoeff() < 1e-5f);
  }
  SUBCASE("jpeg round trip PSNR stays in the pinned band") {
    // measured once against the system codec: 30.6103 dB for this input
    degrade::DegradationRecipe r;
    r.family = Family::kJpegCompression;
    r.params = {{"quality", 5.0}};
    r.seed = 1;
    const Image out = degrade::apply_degradation(checkerboard(64, 8), r);
    const double db = psnr(checkerboard(64, 8), out);
    CHECK(db > 30.6103 - 0.5);
    CHECK(db < 30.6103 + 0.5);
  }
  SUBCASE("every family preserves shape, range, and finiteness") {
    for (const Family f : degrade::degrading_families()) {
      const auto recipe = degrade::sample_recipe(f, 77);
      const Image out = degrade::apply_degradation(face, recipe);
      INFO("family ", degrade::family_name(f));
      CHECK(out.height() == face.height());
      CHECK(out.width() == face.width());
      CHECK(out.all_finite());
      CHECK(out.r.minCoeff() >= 0.0f);
      CHECK(out.r.maxCoeff() <= 1.0f);
    }
  }
  SUBCASE("same recipe and seed are bit-identical, noise differs across seeds") {
    const auto recipe = degrade::sample_recipe(Family::kGaussianNoise, 5);
    const Image a = degrade::apply_degradation(face, recipe);
    const Image b = degrade::apply_degradation(face, recipe);
    CHECK(a.same_pixels(b));
    auto recipe2 = recipe;
    recipe2.seed = 6;
    CHECK(!degrade::apply_degradation(face, recipe2).same_pixels(a));
  }
  SUBCASE("parameter validation names the offender") {
    degrade::DegradationRecipe r;
    r.family = Family::kGaussianBlur;
    r.params = {{"kernel", 4.0}, {"sigma", 1.0}};  // even kernel
    r.seed = 0;
    try {
      (void)degrade::apply_degradation(face, r);
      FAIL("expected ParamOutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParamOutOfRange);
      CHECK(std::string(e.what()).find("kernel") != std::string::npos);
    }
  }
}

TEST_CASE("sample_recipe") {
  SUBCASE("deterministic per seed") {
    const auto a = degrade::sample_recipe(Family::kGaussianBlur, 7);
    const auto b = degrade::sample_recipe(Family::kGaussianBlur, 7);
    CHECK(a.params == b.params);
  }
  SUBCASE("jpeg quality stays in [1,30]") {
    for (uint64_t seed = 0; seed < 300; ++seed) {
      const auto r = degrade::sample_recipe(Family::kJpegCompression, seed);
      const double q = r.params.at("quality");
      CHECK(q >= 1.0);
      CHECK(q <= 30.0);
      CHECK(q == std::round(q));
    }
  }
  SUBCASE("kernel census covers at least 10 distinct odd sizes") {
    std::set<int> kernels;
    for (uint64_t seed = 0; seed < 1000; ++seed) {
      const auto r = degrade::sample_recipe(Family::kGaussianBlur, seed);
      const int k = static_cast<int>(r.params.at("kernel"));
      CHECK(k % 2 == 1);
      CHECK(k >= 3);
      CHECK(k <= 31);
      kernels.insert(k);
    }
    CHECK(kernels.size() >= 10);
  }
  SUBCASE("clean cannot be sampled") { CHECK_THROWS_AS((void)degrade::sample_recipe(Family::kClean, 1), Error); }
  SUBCASE("json round trip") {
    const auto r = degrade::sample_recipe(Family::kShadow, 123);
    const auto back = degrade::DegradationRecipe::from_json(r.to_json());
    CHECK(back.family == r.family);
    CHECK(back.params == r.params);
    CHECK(back.seed == r.seed);
  }
}

TEST_CASE("recipe_at_strength grades severity") {
  const auto mild = degrade::recipe_at_strength(Family::kGaussianBlur, 0.0, 1);
  const auto harsh = degrade::recipe_at_strength(Family::kGaussianBlur, 1.0, 1);
  CHECK(mild.params.at("kernel") == 3.0);
  CHECK(harsh.params.at("kernel") == 31.0);
  CHECK(mild.params.at("sigma") < harsh.params.at("sigma"));

  const auto jpeg_mild = degrade::recipe_at_strength(Family::kJpegCompression, 0.0, 1);
  const auto jpeg_harsh = degrade::recipe_at_strength(Family::kJpegCompression, 1.0, 1);
  CHECK(jpeg_mild.params.at("quality") == 30.0);
  CHECK(jpeg_harsh.params.at("quality") == 1.0);

  CHECK_THROWS_AS((void)degrade::recipe_at_strength(Family::kBlur, 1.5, 1), Error);
}

TEST_CASE("build_set_S") {
  const Image face = data::render_face(data::sample_face_spec(11), 48, 48);
  const auto set = degrade::build_set_S(face, 21);

  SUBCASE("sixteen members, every family exactly once, in enum order") {
    REQUIRE(set.members.size() == 16);
    for (size_t i = 0; i < 16; ++i) CHECK(set.members[i].second.family == static_cast<Family>(i));
  }
  SUBCASE("exactly one clean member equal to the source") {
    int clean_count = 0;
    for (const auto& [img, recipe] : set.members)
      if (recipe.family == Family::kClean) {
        ++clean_count;
        CHECK(img.same_pixels(face));
      }
    CHECK(clean_count == 1);
  }
  SUBCASE("deterministic per seed") {
    const auto again = degrade::build_set_S(face, 21);
    for (size_t i = 0; i < 16; ++i) CHECK(set.members[i].first.same_pixels(again.members[i].first));
  }
  SUBCASE("different seeds change at least one member") {
    const auto other = degrade::build_set_S(face, 22);
    bool any_diff = false;
    for (size_t i = 0; i < 16; ++i) any_diff = any_diff || !set.members[i].first.same_pixels(other.members[i].first);
    CHECK(any_diff);
  }
  SUBCASE("members share the source dimensions") {
    for (const auto& [img, recipe] : set.members) {
      CHECK(img.height() == face.height());
      CHECK(img.width() == face.width());
    }
  }
}

TEST_CASE("build_set_R sampling") {
  SUBCASE("forced inclusion of a high-quality member") {
    std::vector<float> mos(32, 0.5f);
    mos[17] = 0.95f;
    for (uint64_t seed = 0; seed < 50; ++seed) {
      const auto idx = degrade::sample_set_r_indices(mos, seed, 8);
      CHECK(idx.size() == 8);
      bool has_high = false;
      std::set<int> distinct(idx.begin(), idx.end());
      CHECK(distinct.size() == 8);
      for (const int i : idx) has_high = has_high || mos[static_cast<size_t>(i)] > 0.9f;
      CHECK(has_high);
    }
  }
  SUBCASE("manifest of exactly n with one high-quality image always includes it") {
    std::vector<float> mos(8, 0.5f);
    mos[3] = 0.95f;
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const auto idx = degrade::sample_set_r_indices(mos, seed, 8);
      CHECK(std::count(idx.begin(), idx.end(), 3) == 1);
    }
  }
  SUBCASE("all MOS below threshold raises InsufficientHighQuality") {
    std::vector<float> mos(16, 0.9f);
    try {
      (void)degrade::sample_set_r_indices(mos, 1, 4);
      FAIL("expected InsufficientHighQuality");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientHighQuality);
    }
  }
  SUBCASE("pool smaller than n raises InsufficientImages") {
    std::vector<float> mos(4, 0.95f);
    try {
      (void)degrade::sample_set_r_indices(mos, 1, 8);
      FAIL("expected InsufficientImages");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientImages);
    }
  }
  SUBCASE("census: every pool member is eventually drawn") {
    std::vector<float> mos(500, 0.5f);
    for (size_t i = 0; i < mos.size(); i += 25) mos[i] = 0.95f;
    std::vector<int> seen(500, 0);
    for (uint64_t draw = 0; draw < 10000; ++draw)
      for (const int i : degrade::sample_set_r_indices(mos, draw, 256)) ++seen[static_cast<size_t>(i)];
    CHECK(*std::min_element(seen.begin(), seen.end()) > 0);
  }
}
