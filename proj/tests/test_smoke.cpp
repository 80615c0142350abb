#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dslfiqa/core/rng.hpp"
#include "dslfiqa/core/sha1.hpp"
#include "dslfiqa/data/toy_faces.hpp"
#include "dslfiqa/degrade/degrade.hpp"
#include "dslfiqa/dsl/losses.hpp"
#include "dslfiqa/dsl/train.hpp"
#include "dslfiqa/io/image_io.hpp"
#include "dslfiqa/metrics/metrics.hpp"

using namespace dslfiqa;

TEST_CASE("sha1 known vector") {
  CHECK(Sha1::hash("abc", 3) == "a9993e364706816aba3e25717850c26c9cd0d89d");
}

TEST_CASE("rng determinism") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("face render and degrade") {
  const auto spec = data::sample_face_spec(7);
  const Image img = data::render_face(spec, 64, 64);
  CHECK(img.all_finite());
  const auto recipe = degrade::sample_recipe(degrade::Family::kGaussianBlur, 3);
  const Image out = degrade::apply_degradation(img, recipe);
  CHECK(out.all_finite());
  CHECK(out.height() == 64);
}
