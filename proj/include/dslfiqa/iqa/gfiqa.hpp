#pragma once

#include <string>
#include <vector>

#include "dslfiqa/core/archive.hpp"
#include "dslfiqa/data/dataset.hpp"
#include "dslfiqa/dsl/encoder.hpp"
#include "dslfiqa/iqa/model.hpp"

namespace dslfiqa::iqa {

struct PatchPrediction {
  lm::PatchRect rect;
  RegionalGrid grid;
  double patch_mos = 0.0;
};

struct QualityPrediction {
  double mos = 0.0;
  std::vector<PatchPrediction> per_patch;
};

struct TrainedGfiqa {
  GfiqaModel<float> model;
  ModelConfig config;
  int iterations_run = 0;
  std::vector<std::pair<int, double>> loss_log;
};

// Four corner crops plus the center crop, deduplicated; covers every pixel
// for any side in [P, 2P].
std::vector<lm::PatchRect> five_crop_layout(int image_h, int image_w, int patch);

// Scores one image: the degradation representation is computed once on the
// full image, each crop is scored with its own landmark subset, and the
// image MOS is the mean of the crop scores.
QualityPrediction score_image(const Image& image, TrainedGfiqa& model, dsl::TrainedEncoder& encoder,
                              const lm::LandmarkSet& landmarks);

// Per-pixel confidence map: every crop's softmaxed confidence grid is
// expanded to pixel space (one weight per token cell) and overlaps average.
Eigen::ArrayXXf export_confidence_map(const QualityPrediction& prediction, int image_h, int image_w, int token_size);

void write_confidence_map(const std::string& path_prefix, const Eigen::ArrayXXf& map);

// Trains the quality regressor on random crops with horizontal flips; the
// degradation encoder and the landmark sets stay frozen throughout.
TrainedGfiqa train_gfiqa(const data::LoadedDataset& dataset, dsl::TrainedEncoder& encoder, const ModelConfig& config);

Archive gfiqa_to_archive(TrainedGfiqa& model);
TrainedGfiqa gfiqa_from_archive(const Archive& archive);
void save_gfiqa(TrainedGfiqa& model, const std::string& path);
TrainedGfiqa load_gfiqa(const std::string& path);

template <class S>
std::string gfiqa_state_hash(GfiqaModel<S>& model) {
  Sha1 sha;
  for (const auto& p : model.params())
    for (Eigen::Index j = 0; j < p.value->cols(); ++j)
      for (Eigen::Index i = 0; i < p.value->rows(); ++i) {
        const double v = static_cast<double>((*p.value)(i, j));
        sha.update(&v, sizeof(v));
      }
  return sha.hex_digest();
}

}  // namespace dslfiqa::iqa
