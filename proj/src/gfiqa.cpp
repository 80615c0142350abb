#include "dslfiqa/iqa/gfiqa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "dslfiqa/io/image_io.hpp"
#include "dslfiqa/nn/adam.hpp"

namespace dslfiqa::iqa {

nlohmann::json ModelConfig::to_json() const {
  return {{"patch_input", patch_input},
          {"token_size", token_size},
          {"embed_dim", embed_dim},
          {"heads", heads},
          {"refine_blocks", refine_blocks},
          {"window", window},
          {"decoder_blocks", decoder_blocks},
          {"head_hidden", head_hidden},
          {"mlp_ratio", mlp_ratio},
          {"deg_dim", deg_dim},
          {"landmark_bands", landmark_bands},
          {"landmark_vocab", landmark_vocab},
          {"use_landmarks", use_landmarks},
          {"charbonnier_eps", charbonnier_eps},
          {"learning_rate", learning_rate},
          {"iterations", iterations},
          {"batch", batch},
          {"seed", seed},
          {"ca_reduction", ca_reduction}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.patch_input = j.value("patch_input", c.patch_input);
  c.token_size = j.value("token_size", c.token_size);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.heads = j.value("heads", c.heads);
  c.refine_blocks = j.value("refine_blocks", c.refine_blocks);
  c.window = j.value("window", c.window);
  c.decoder_blocks = j.value("decoder_blocks", c.decoder_blocks);
  c.head_hidden = j.value("head_hidden", c.head_hidden);
  c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
  c.deg_dim = j.value("deg_dim", c.deg_dim);
  c.landmark_bands = j.value("landmark_bands", c.landmark_bands);
  c.landmark_vocab = j.value("landmark_vocab", c.landmark_vocab);
  c.use_landmarks = j.value("use_landmarks", c.use_landmarks);
  c.charbonnier_eps = j.value("charbonnier_eps", c.charbonnier_eps);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.iterations = j.value("iterations", c.iterations);
  c.batch = j.value("batch", c.batch);
  c.seed = j.value("seed", c.seed);
  c.ca_reduction = j.value("ca_reduction", c.ca_reduction);
  return c;
}

namespace {

Image crop_image(const Image& img, const lm::PatchRect& rect) {
  Image out(rect.h, rect.w);
  out.r = img.r.block(rect.y0, rect.x0, rect.h, rect.w);
  out.g = img.g.block(rect.y0, rect.x0, rect.h, rect.w);
  out.b = img.b.block(rect.y0, rect.x0, rect.h, rect.w);
  return out;
}

Image flip_image(const Image& img) {
  Image out = img;
  out.r = img.r.rowwise().reverse();
  out.g = img.g.rowwise().reverse();
  out.b = img.b.rowwise().reverse();
  return out;
}

Eigen::VectorXf landmark_vector(const ModelConfig& cfg, const lm::LandmarkSet& landmarks, const lm::PatchRect& rect,
                                int image_h, int image_w) {
  if (!cfg.use_landmarks) return Eigen::VectorXf::Zero(cfg.landmark_dim());
  const auto in_patch = lm::landmarks_in_patch(landmarks, rect, image_h, image_w);
  return lm::pool_landmark_encoding(in_patch, cfg.landmark_vocab, cfg.landmark_bands);
}

}  // namespace

std::vector<lm::PatchRect> five_crop_layout(int image_h, int image_w, int patch) {
  if (image_h < patch || image_w < patch) fail(ErrorCode::ImageTooSmall, "image side smaller than the crop size");
  const int ymax = image_h - patch, xmax = image_w - patch;
  const std::vector<std::pair<int, int>> corners = {
      {0, 0}, {0, xmax}, {ymax, 0}, {ymax, xmax}, {ymax / 2, xmax / 2}};
  std::vector<lm::PatchRect> rects;
  std::set<std::pair<int, int>> seen;
  for (const auto& [y0, x0] : corners)
    if (seen.insert({y0, x0}).second) rects.push_back({x0, y0, patch, patch});
  return rects;
}

QualityPrediction score_image(const Image& image, TrainedGfiqa& trained, dsl::TrainedEncoder& encoder,
                              const lm::LandmarkSet& landmarks) {
  require_valid(image, "score_image");
  const ModelConfig& cfg = trained.config;
  const Eigen::VectorXf deg_rep = encoder.encode(image);

  QualityPrediction pred;
  const auto rects = five_crop_layout(image.height(), image.width(), cfg.patch_input);
  for (const auto& rect : rects) {
    const Image crop = crop_image(image, rect);
    const Eigen::VectorXf lm_vec = landmark_vector(cfg, landmarks, rect, image.height(), image.width());
    RegionalGrid grid;
    const float patch_mos = trained.model.forward_crop(crop, deg_rep, lm_vec, &grid);
    pred.per_patch.push_back({rect, std::move(grid), static_cast<double>(patch_mos)});
  }
  double sum = 0.0;
  for (const auto& p : pred.per_patch) sum += p.patch_mos;
  pred.mos = sum / static_cast<double>(pred.per_patch.size());
  return pred;
}

Eigen::ArrayXXf export_confidence_map(const QualityPrediction& prediction, int image_h, int image_w, int token_size) {
  Eigen::ArrayXXf acc = Eigen::ArrayXXf::Zero(image_h, image_w);
  Eigen::ArrayXXf count = Eigen::ArrayXXf::Zero(image_h, image_w);
  for (const auto& p : prediction.per_patch) {
    const int g = p.rect.w / token_size;
    nn::Mat<float> logits = p.grid.confidences.transpose();
    const nn::Mat<float> w = nn::softmax_rows(logits);
    for (int gy = 0; gy < g; ++gy)
      for (int gx = 0; gx < g; ++gx) {
        const float weight = w(0, gy * g + gx);
        for (int dy = 0; dy < token_size; ++dy)
          for (int dx = 0; dx < token_size; ++dx) {
            const int y = p.rect.y0 + gy * token_size + dy;
            const int x = p.rect.x0 + gx * token_size + dx;
            acc(y, x) += weight;
            count(y, x) += 1.0f;
          }
      }
  }
  return (count > 0.0f).select(acc / count.max(1e-12f), acc);
}

void write_confidence_map(const std::string& path_prefix, const Eigen::ArrayXXf& map) {
  const float mx = std::max(map.maxCoeff(), 1e-12f);
  write_png_gray(path_prefix + ".png", map / mx);

  std::ofstream raw(path_prefix + ".raw", std::ios::binary | std::ios::trunc);
  if (!raw) fail(ErrorCode::IOFailure, "cannot open '" + path_prefix + ".raw' for writing");
  // row-major float32, little-endian
  for (Eigen::Index y = 0; y < map.rows(); ++y)
    for (Eigen::Index x = 0; x < map.cols(); ++x) {
      const float v = map(y, x);
      raw.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  nlohmann::json header = {{"height", map.rows()}, {"width", map.cols()}, {"dtype", "f32"}, {"order", "row_major"}};
  std::ofstream hdr(path_prefix + ".json", std::ios::trunc);
  hdr << header.dump(2) << "\n";
  if (!raw || !hdr) fail(ErrorCode::IOFailure, "confidence map write failed");
}

TrainedGfiqa train_gfiqa(const data::LoadedDataset& dataset, dsl::TrainedEncoder& encoder, const ModelConfig& config) {
  config.validate();
  TrainedGfiqa trained;
  trained.config = config;

  const auto train_idx = dataset.split_indices(data::Split::kTrain);
  if (train_idx.empty()) fail(ErrorCode::InsufficientImages, "training split is empty");
  for (const size_t i : train_idx)
    if (!dataset.manifest.records[i].mos) fail(ErrorCode::BadConfig, "training record lacks a MOS value");

  Rng root(config.seed);
  trained.model.init(config, root.split("init"));

  // The encoder stays frozen, so each training image's representation and its
  // flipped twin can be computed once up front.
  std::vector<Eigen::VectorXf> reps(dataset.images.size()), reps_flipped(dataset.images.size());
  std::vector<Image> flipped(dataset.images.size());
  for (const size_t i : train_idx) {
    reps[i] = encoder.encode(dataset.images[i]);
    flipped[i] = flip_image(dataset.images[i]);
    reps_flipped[i] = encoder.encode(flipped[i]);
  }

  nn::Adam<float> opt(config.learning_rate);
  auto params = trained.model.params();
  nn::zero_grads(params);

  const int p = config.patch_input;
  for (int iter = 0; iter < config.iterations; ++iter) {
    Rng it_rng = root.split("iter").split(static_cast<uint64_t>(iter));
    double loss_sum = 0.0;
    const float inv_batch = 1.0f / static_cast<float>(config.batch);
    for (int b = 0; b < config.batch; ++b) {
      const size_t rec_i = train_idx[static_cast<size_t>(it_rng.uniform_int(0, static_cast<int64_t>(train_idx.size()) - 1))];
      const bool flip = it_rng.uniform() < 0.5;
      const Image& img = flip ? flipped[rec_i] : dataset.images[rec_i];
      const lm::LandmarkSet lms =
          flip ? lm::flip_horizontal(dataset.landmarks[rec_i]) : dataset.landmarks[rec_i];
      if (img.height() < p || img.width() < p) fail(ErrorCode::ImageTooSmall, "training image smaller than crop");
      const int y0 = static_cast<int>(it_rng.uniform_int(0, img.height() - p));
      const int x0 = static_cast<int>(it_rng.uniform_int(0, img.width() - p));
      const lm::PatchRect rect{x0, y0, p, p};

      const Image crop = crop_image(img, rect);
      const Eigen::VectorXf& deg = flip ? reps_flipped[rec_i] : reps[rec_i];
      const Eigen::VectorXf lm_vec = landmark_vector(config, lms, rect, img.height(), img.width());

      const float gt = static_cast<float>(*dataset.manifest.records[rec_i].mos);
      const float pred = trained.model.forward_crop(crop, deg, lm_vec, nullptr);
      const float eps = static_cast<float>(config.charbonnier_eps);
      loss_sum += static_cast<double>(charbonnier_loss(pred, gt, eps));
      trained.model.backward_crop(charbonnier_loss_dpred(pred, gt, eps) * inv_batch);
    }
    const double loss = loss_sum / config.batch;
    if (!std::isfinite(loss)) fail(ErrorCode::NonFiniteLoss, "non-finite loss at iteration " + std::to_string(iter));
    opt.step(params);
    nn::zero_grads(params);
    trained.loss_log.emplace_back(iter, loss);
  }
  trained.iterations_run = config.iterations;
  return trained;
}

namespace {

std::vector<float> mat_to_vec(const nn::Mat<float>& m) {
  return std::vector<float>(m.data(), m.data() + m.size());
}

void vec_to_mat(const Archive::Entry& e, nn::Mat<float>& m) {
  if (e.shape.size() != 2 || e.shape[0] != m.rows() || e.shape[1] != m.cols())
    fail(ErrorCode::BadCheckpoint, "array '" + e.name + "' has an unexpected shape");
  std::copy(e.data.begin(), e.data.end(), m.data());
}

}  // namespace

Archive gfiqa_to_archive(TrainedGfiqa& trained) {
  Archive ar;
  ar.meta["kind"] = "gfiqa_model";
  ar.meta["config"] = trained.config.to_json();
  ar.meta["iterations_run"] = trained.iterations_run;
  for (const auto& p : trained.model.params()) ar.add(p.name, {p.value->rows(), p.value->cols()}, mat_to_vec(*p.value));
  return ar;
}

TrainedGfiqa gfiqa_from_archive(const Archive& archive) {
  if (archive.meta.value("kind", "") != "gfiqa_model")
    fail(ErrorCode::BadCheckpoint, "archive does not hold a quality model");
  TrainedGfiqa trained;
  trained.config = ModelConfig::from_json(archive.meta.at("config"));
  trained.iterations_run = archive.meta.value("iterations_run", 0);
  trained.model.init(trained.config, Rng(0));
  for (const auto& p : trained.model.params()) vec_to_mat(archive.get(p.name), *p.value);
  return trained;
}

void save_gfiqa(TrainedGfiqa& trained, const std::string& path) { gfiqa_to_archive(trained).save(path); }

TrainedGfiqa load_gfiqa(const std::string& path) { return gfiqa_from_archive(Archive::load(path)); }

}  // namespace dslfiqa::iqa
