#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "dslfiqa/data/toy_faces.hpp"
#include "dslfiqa/degrade/degrade.hpp"
#include "dslfiqa/dsl/train.hpp"

using namespace dslfiqa;

namespace {

dsl::EncoderConfig tiny_encoder_config() {
  dsl::EncoderConfig cfg;
  cfg.input_size = 24;
  cfg.channels = {4, 8, 8};
  cfg.strides = {1, 2, 2};
  cfg.repr_dim = 12;
  cfg.mlp_hidden = 8;
  cfg.set_r_size = 6;
  cfg.patch_size = 12;
  cfg.patch_batch_images = 4;
  cfg.iterations = 6;
  cfg.learning_rate = 1e-3;
  cfg.seed = 3;
  return cfg;
}

struct ToyWorld {
  std::vector<Image> clean_pool;
  degrade::RPool r_pool;
};

ToyWorld make_world(int n_clean, int n_real, int side) {
  ToyWorld world;
  for (int i = 0; i < n_clean; ++i)
    world.clean_pool.push_back(data::render_face(data::sample_face_spec(100 + static_cast<uint64_t>(i)), side, side));
  Rng rng(55);
  for (int i = 0; i < n_real; ++i) {
    const Image face = data::render_face(data::sample_face_spec(900 + static_cast<uint64_t>(i)), side, side);
    const auto fam = degrade::degrading_families()[static_cast<size_t>(i) % 15];
    const double strength = rng.uniform();
    const auto recipe = degrade::recipe_at_strength(fam, strength, 77 + static_cast<uint64_t>(i));
    world.r_pool.images.push_back(degrade::apply_degradation(face, recipe));
    world.r_pool.mos.push_back(static_cast<float>(1.0 - strength));
  }
  world.r_pool.mos[0] = 0.97f;  // guarantee the Set R high-quality constraint
  return world;
}

}  // namespace

TEST_CASE("encode_degradation") {
  const auto cfg = tiny_encoder_config();
  dsl::TrainedEncoder encoder;
  encoder.config = cfg;
  encoder.net.init(cfg, Rng(1));
  const Image img = data::render_face(data::sample_face_spec(7), 24, 24);

  SUBCASE("deterministic and of the configured dimension") {
    const auto a = dsl::encode_degradation(encoder, img);
    const auto b = dsl::encode_degradation(encoder, img);
    CHECK(a.size() == 12);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0f);
  }
  SUBCASE("a full Set S yields 16 representations of dimension D") {
    const auto set = degrade::build_set_S(img, 5);
    int count = 0;
    for (const auto& [member, recipe] : set.members) {
      const auto rep = dsl::encode_degradation(encoder, member);
      CHECK(rep.size() == 12);
      CHECK(rep.allFinite());
      ++count;
    }
    CHECK(count == 16);
  }
  SUBCASE("distinct images map to distinct vectors under random init") {
    const Image other = data::render_face(data::sample_face_spec(8), 24, 24);
    const auto a = dsl::encode_degradation(encoder, img);
    const auto b = dsl::encode_degradation(encoder, other);
    CHECK((a - b).norm() > 0.0f);
  }
  SUBCASE("undersized input raises ShapeMismatch") {
    const Image small = data::render_face(data::sample_face_spec(9), 2, 2);
    CHECK_THROWS_AS((void)dsl::encode_degradation(encoder, small), Error);
  }
}

TEST_CASE("train_encoder") {
  const auto world = make_world(4, 12, 24);

  SUBCASE("zero learning rate leaves the weights at their init") {
    auto cfg = tiny_encoder_config();
    cfg.iterations = 1;
    cfg.learning_rate = 0.0;
    auto trained = dsl::train_encoder(dsl::Regime::kDsl, world.clean_pool, world.r_pool, cfg);
    dsl::EncoderNet<float> reference;
    reference.init(cfg, Rng(cfg.seed).split("init"));
    // weights match; running BN stats legitimately moved during forward passes
    auto got = trained.net.params();
    auto want = reference.params();
    for (size_t i = 0; i < got.size(); ++i)
      CHECK((*got[i].value - *want[i].value).cwiseAbs().maxCoeff() == 0.0f);
  }
  SUBCASE("each regime runs, logs losses, and is bit-reproducible") {
    for (const auto regime : {dsl::Regime::kDsl, dsl::Regime::kPatch, dsl::Regime::kNaive}) {
      auto cfg = tiny_encoder_config();
      const auto a = dsl::train_encoder(regime, world.clean_pool, world.r_pool, cfg);
      const auto b = dsl::train_encoder(regime, world.clean_pool, world.r_pool, cfg);
      REQUIRE(a.loss_log.size() == 6);
      for (size_t i = 0; i < 6; ++i) {
        CHECK(std::isfinite(a.loss_log[i].second));
        CHECK(a.loss_log[i].second == b.loss_log[i].second);
      }
      CHECK(a.regime == dsl::regime_name(regime));
    }
  }
  SUBCASE("regimes produce different loss trajectories") {
    auto cfg = tiny_encoder_config();
    const auto a = dsl::train_encoder(dsl::Regime::kDsl, world.clean_pool, world.r_pool, cfg);
    const auto b = dsl::train_encoder(dsl::Regime::kPatch, world.clean_pool, world.r_pool, cfg);
    CHECK(a.loss_log.back().second != b.loss_log.back().second);
  }
  SUBCASE("checkpoint round trip preserves encodes and hashes") {
    namespace fs = std::filesystem;
    auto cfg = tiny_encoder_config();
    auto trained = dsl::train_encoder(dsl::Regime::kDsl, world.clean_pool, world.r_pool, cfg);
    const std::string path = "tmp_encoder.ckpt";
    dsl::save_encoder(trained, path);
    auto loaded = dsl::load_encoder(path);
    CHECK(loaded.regime == "dsl");
    CHECK(loaded.iterations_run == cfg.iterations);
    CHECK(dsl::state_hash(loaded.net) == dsl::state_hash(trained.net));
    const Image probe = world.r_pool.images[0];
    CHECK((dsl::encode_degradation(loaded, probe) - dsl::encode_degradation(trained, probe)).cwiseAbs().maxCoeff() ==
          0.0f);
    fs::remove(path);
  }
  SUBCASE("missing high-quality Set R member aborts") {
    auto bad = world;
    for (auto& m : bad.r_pool.mos) m = 0.5f;
    auto cfg = tiny_encoder_config();
    CHECK_THROWS_AS((void)dsl::train_encoder(dsl::Regime::kDsl, bad.clean_pool, bad.r_pool, cfg), Error);
  }
}

TEST_CASE("loss log csv format") {
  namespace fs = std::filesystem;
  dsl::write_loss_log_csv("tmp_loss.csv", {{0, 1.5}, {1, 0.75}});
  std::ifstream in("tmp_loss.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,loss");
  std::getline(in, line);
  CHECK(line.rfind("0,", 0) == 0);
  fs::remove("tmp_loss.csv");
}
