#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "dslfiqa/core/archive.hpp"
#include "dslfiqa/core/rng.hpp"
#include "dslfiqa/core/sha1.hpp"
#include "dslfiqa/data/dataset.hpp"
#include "dslfiqa/data/embeddings.hpp"
#include "dslfiqa/data/manifest.hpp"
#include "dslfiqa/data/toy_faces.hpp"
#include "dslfiqa/io/image_io.hpp"

using namespace dslfiqa;
namespace fs = std::filesystem;

namespace {

std::string file_sha1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Sha1::hash(contents.data(), contents.size());
}

}  // namespace

TEST_CASE("acr mapping") {
  CHECK(data::acr_to_score_raw(40.0) == doctest::Approx(0.40));
  CHECK(data::acr_to_score_raw(0.0) == doctest::Approx(0.0));
  CHECK(data::acr_to_score_raw(100.0) == doctest::Approx(1.0));
  CHECK(data::acr_to_score(data::AcrCategory::kFair) == doctest::Approx(0.50));
  CHECK(data::acr_to_score(data::AcrCategory::kBad) == doctest::Approx(0.10));
  CHECK(data::acr_to_score(data::AcrCategory::kExcellent) == doctest::Approx(0.90));
  // monotone over the ordered categories
  double prev = -1.0;
  for (const auto c : {data::AcrCategory::kBad, data::AcrCategory::kPoor, data::AcrCategory::kFair,
                       data::AcrCategory::kGood, data::AcrCategory::kExcellent}) {
    CHECK(data::acr_to_score(c) > prev);
    prev = data::acr_to_score(c);
  }
  CHECK_THROWS_AS((void)data::acr_to_score_raw(101.0), Error);
}

TEST_CASE("aggregate_mos") {
  SUBCASE("constant scores") {
    std::vector<data::AnnotationRecord> recs(20);
    for (auto& r : recs) {
      r.is_category = false;
      r.raw_score = 60.0;
    }
    CHECK(data::aggregate_mos(recs) == doctest::Approx(0.6));
  }
  SUBCASE("simple arithmetic") {
    std::vector<data::AnnotationRecord> recs(4);
    const double raw[4] = {20, 40, 60, 80};
    for (int i = 0; i < 4; ++i) recs[static_cast<size_t>(i)].raw_score = raw[i];
    CHECK(data::aggregate_mos(recs) == doctest::Approx(0.5));
  }
  SUBCASE("random sets match a summation oracle and permutation invariance") {
    Rng rng(3);
    std::vector<data::AnnotationRecord> recs(20);
    double sum = 0.0;
    for (auto& r : recs) {
      r.raw_score = rng.uniform(0.0, 100.0);
      sum += r.raw_score / 100.0;
    }
    CHECK(std::abs(data::aggregate_mos(recs) - sum / 20.0) < 1e-12);
    auto shuffled = recs;
    rng.shuffle(shuffled);
    CHECK(data::aggregate_mos(shuffled) == doctest::Approx(data::aggregate_mos(recs)).epsilon(1e-12));
  }
  SUBCASE("empty set throws") {
    CHECK_THROWS_AS((void)data::aggregate_mos({}), Error);
  }
}

TEST_CASE("annotator qualification") {
  SUBCASE("16 of 20 passes, 15 of 20 fails") {
    std::vector<double> gt(20, 0.5), answers(20, 0.5);
    for (int i = 0; i < 4; ++i) answers[static_cast<size_t>(i)] = 0.9;  // 4 wrong
    auto result = data::qualify_annotator(answers, gt);
    CHECK(result.accuracy == doctest::Approx(0.80));
    CHECK(result.passed);
    answers[4] = 0.9;  // 5 wrong -> 15/20
    result = data::qualify_annotator(answers, gt);
    CHECK(result.accuracy == doctest::Approx(0.75));
    CHECK(!result.passed);
  }
  SUBCASE("margin is inclusive") {
    const auto res = data::qualify_annotator({0.65}, {0.5});
    CHECK(res.accuracy == doctest::Approx(1.0));
    CHECK(res.passed);
    CHECK(!data::qualify_annotator({0.6501}, {0.5}).passed);
  }
  SUBCASE("length mismatch throws") {
    CHECK_THROWS_AS((void)data::qualify_annotator({0.5}, {0.5, 0.6}), Error);
  }
}

TEST_CASE("manifest round trip") {
  data::DatasetManifest m;
  data::ManifestRecord a;
  a.image_path = "images/x.png";
  a.mos = 0.73;
  a.split = data::Split::kTrain;
  a.skin_tone = data::SkinTone::kMedium;
  a.gender = data::Gender::kFemale;
  a.occluded = true;
  a.label = "gaussian_blur";
  a.strength = 0.4;
  data::ManifestRecord b;
  b.image_path = "images/y.png";
  b.split = data::Split::kTest;
  m.records = {a, b};

  const std::string path = "tmp_manifest.jsonl";
  data::write_manifest(path, m);
  const auto back = data::read_manifest(path);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[0] == a);
  CHECK(back.records[1] == b);
  fs::remove(path);

  SUBCASE("duplicate paths fail validation") {
    m.records.push_back(a);
    CHECK_THROWS_AS(m.validate(), Error);
  }
}

TEST_CASE("toy dataset generation") {
  const std::string dir = "tmp_toyset";
  fs::remove_all(dir);
  data::ToyDatasetOptions opt;
  opt.n_images = 60;
  opt.image_size = 32;
  opt.seed = 5;
  const auto manifest = data::generate_toy_dataset(opt, dir);

  SUBCASE("byte-identical regeneration") {
    const std::string hash1 = file_sha1(dir + "/manifest.jsonl");
    fs::remove_all(dir);
    data::generate_toy_dataset(opt, dir);
    CHECK(file_sha1(dir + "/manifest.jsonl") == hash1);
  }
  SUBCASE("records are loadable and consistent") {
    const auto ds = data::load_dataset(dir + "/manifest.jsonl");
    REQUIRE(ds.images.size() == 60);
    CHECK(ds.images[0].height() == 32);
    REQUIRE(ds.landmarks.size() == 60);
    CHECK(ds.landmarks[0].entries.size() == 68);
    // splits 70/10/20
    CHECK(ds.split_indices(data::Split::kTrain).size() == 42);
    CHECK(ds.split_indices(data::Split::kVal).size() == 6);
    CHECK(ds.split_indices(data::Split::kTest).size() == 12);
  }
  SUBCASE("clean images carry near-perfect MOS") {
    for (const auto& r : manifest.records)
      if (r.label && *r.label == "clean") CHECK(*r.mos >= 0.97);
  }
  SUBCASE("minimum size enforced") {
    data::ToyDatasetOptions bad = opt;
    bad.n_images = 5;
    CHECK_THROWS_AS((void)data::generate_toy_dataset(bad, dir + "_bad"), Error);
  }
}

TEST_CASE("toy dataset MOS histogram spans the range") {
  const std::string dir = "tmp_toyset_hist";
  fs::remove_all(dir);
  data::ToyDatasetOptions opt;
  opt.n_images = 200;
  opt.image_size = 16;
  opt.seed = 11;
  const auto manifest = data::generate_toy_dataset(opt, dir);
  std::set<int> deciles;
  for (const auto& r : manifest.records) deciles.insert(std::min(9, static_cast<int>(*r.mos * 10.0)));
  CHECK(deciles.size() >= 5);
  fs::remove_all(dir);
}

TEST_CASE("embeddings TSV round trip") {
  Rng rng(17);
  data::EmbeddingTable table;
  table.reps.resize(7, 5);
  for (int i = 0; i < 7; ++i)
    for (int d = 0; d < 5; ++d) table.reps(i, d) = static_cast<float>(rng.normal());
  table.labels = {"blur", "noise", "jpeg", "blur", "clean", "noise", "flare"};

  const std::string path = "tmp_embeddings.tsv";
  data::write_embeddings_tsv(path, table);
  const auto back = data::read_embeddings_tsv(path);
  REQUIRE(back.reps.rows() == 7);
  REQUIRE(back.reps.cols() == 5);
  CHECK((back.reps - table.reps).cwiseAbs().maxCoeff() == 0.0f);  // exact round trip
  CHECK(back.labels == table.labels);
  fs::remove(path);
}

TEST_CASE("archive round trip and content hash") {
  Archive ar;
  ar.meta["kind"] = "test";
  ar.meta["note"] = "payload";
  ar.add("w", {2, 3}, {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f});
  ar.add("b", {3, 1}, {0.5f, -0.5f, 0.25f});
  const std::string hash = ar.content_hash();

  const std::string path = "tmp_archive.bin";
  ar.save(path);
  const auto back = Archive::load(path);
  CHECK(back.meta.at("note") == "payload");
  CHECK(back.content_hash() == hash);
  CHECK(back.get("w").data == ar.get("w").data);
  CHECK(back.get("b").shape == std::vector<int64_t>{3, 1});
  CHECK(back.has("w"));
  CHECK(!back.has("missing"));

  SUBCASE("save is byte-stable") {
    const std::string h1 = file_sha1(path);
    ar.save(path);
    CHECK(file_sha1(path) == h1);
  }
  fs::remove(path);
}

TEST_CASE("png and jpeg file io") {
  const Image img = data::render_face(data::sample_face_spec(23), 40, 40);
  write_png("tmp_face.png", img);
  const Image back = read_image("tmp_face.png");
  // 8-bit quantization is the only loss
  CHECK((back.r - img.r).abs().maxCoeff() < 0.5f / 255.0f + 1e-6f);
  write_jpeg("tmp_face.jpg", img, 90);
  const Image jback = read_image("tmp_face.jpg");
  CHECK(jback.height() == 40);
  CHECK(psnr(img, jback) > 25.0);
  fs::remove("tmp_face.png");
  fs::remove("tmp_face.jpg");
}
