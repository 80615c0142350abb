#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dslfiqa/core/image.hpp"
#include "dslfiqa/data/manifest.hpp"
#include "dslfiqa/degrade/recipe.hpp"
#include "dslfiqa/landmarks/landmarks.hpp"

namespace dslfiqa::data {

// Geometry and palette of one procedural face; everything is normalized to
// the image extent so the renderer and the landmark provider stay in sync.
struct FaceSpec {
  float cx = 0.5f, cy = 0.52f;
  float face_rx = 0.30f, face_ry = 0.38f;
  float eye_dx = 0.13f;
  float eye_dy = -0.12f;  // relative to face center, negative = above
  float eye_rx = 0.055f, eye_ry = 0.035f;
  float brow_dy = -0.07f;  // relative to eye line
  float nose_len = 0.14f;
  float mouth_dy = 0.20f;
  float mouth_rx = 0.12f, mouth_ry = 0.045f;
  float skin[3] = {0.9f, 0.75f, 0.65f};
  float hair[3] = {0.2f, 0.15f, 0.1f};
  float iris[3] = {0.3f, 0.5f, 0.8f};
  float lip[3] = {0.7f, 0.3f, 0.3f};
  float bg_top[3] = {0.8f, 0.85f, 0.9f};
  float bg_bottom[3] = {0.6f, 0.65f, 0.7f};
  SkinTone tone = SkinTone::kUnknown;
};

FaceSpec sample_face_spec(uint64_t seed);
Image render_face(const FaceSpec& spec, int height, int width);

// Deterministic 68-point layout (jaw, brows, nose, eyes, lips) derived from
// the same FaceSpec geometry the renderer uses.
lm::LandmarkSet synthetic_landmark_provider(const FaceSpec& spec, int image_h, int image_w);

struct ToyDatasetOptions {
  int n_images = 200;
  int image_size = 96;
  uint64_t seed = 1;
  // Families used for severity-graded degradations; every member must carry
  // at least one severity-graded parameter.
  std::vector<degrade::Family> families = {
      degrade::Family::kGaussianBlur, degrade::Family::kGaussianNoise, degrade::Family::kJpegCompression,
      degrade::Family::kLowLight,     degrade::Family::kHighLight,     degrade::Family::kMotionBlur,
  };
  double clean_fraction = 0.12;      // fraction emitted undegraded (strength 0)
  double annotator_noise = 0.02;     // +- jitter applied to mos = 1 - strength
  bool compound = false;             // add a secondary degradation
  // secondary strength = primary strength times a factor in this range
  double secondary_rel_lo = 0.25;
  double secondary_rel_hi = 0.55;
  // pool the secondary draws from; empty means every degrading family
  std::vector<degrade::Family> secondary_families;
  // Use the generator's own in-the-wild degradation routines instead of the
  // synthetic engine: same family labels, different imaging physics
  // (anisotropic blur, banded sensor noise, double compression, bloom, ...).
  bool realistic_ops = false;
  bool camera_jitter = false;        // mild gain and sensor noise on every image
  double strength_lo = 0.0;          // primary degradation strength range
  double strength_hi = 1.0;
  Split fixed_split = Split::kTrain; // used when split_fractions disabled
  bool use_split_fractions = true;   // 70/10/20 train/val/test
};

// Writes PNGs, a JSON-lines manifest, and a landmark file under out_dir;
// returns the manifest. Deterministic in (options, seed).
DatasetManifest generate_toy_dataset(const ToyDatasetOptions& options, const std::string& out_dir);

// Convenience wrapper matching the CLI surface (n images, default options).
DatasetManifest generate_toy_dataset(int n_images, uint64_t rng_seed, const std::string& out_dir);

// Degradation-retrieval benchmark: a compound-degradation training world for
// the encoders, a compound gallery, and pure single-degradation queries, all
// on disjoint procedural faces.
struct RetrievalBenchmarkOptions {
  int n_train = 400;
  int n_gallery = 300;
  int n_queries = 100;
  int image_size = 64;
  uint64_t seed = 1;
  std::vector<degrade::Family> families = {
      degrade::Family::kGaussianBlur, degrade::Family::kGaussianNoise, degrade::Family::kJpegCompression,
      degrade::Family::kLowLight,     degrade::Family::kHighLight,     degrade::Family::kMotionBlur,
  };
};

// Writes train/, gallery/, and queries/ datasets under out_dir.
void generate_retrieval_benchmark(const RetrievalBenchmarkOptions& options, const std::string& out_dir);

}  // namespace dslfiqa::data
