#include "dslfiqa/dsl/train.hpp"

#include <cmath>

#include "dslfiqa/dsl/losses.hpp"
#include "dslfiqa/nn/adam.hpp"

namespace dslfiqa::dsl {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::kDsl: return "dsl";
    case Regime::kPatch: return "patch";
    case Regime::kNaive: return "naive";
  }
  return "dsl";
}

Regime regime_from_name(const std::string& name) {
  if (name == "dsl") return Regime::kDsl;
  if (name == "patch") return Regime::kPatch;
  if (name == "naive") return Regime::kNaive;
  fail(ErrorCode::BadConfig, "unknown training regime '" + name + "'");
}

namespace {

using nn::Mat;

Image crop(const Image& img, int y0, int x0, int side) {
  Image out(side, side);
  out.r = img.r.block(y0, x0, side, side);
  out.g = img.g.block(y0, x0, side, side);
  out.b = img.b.block(y0, x0, side, side);
  return out;
}

struct IterationResult {
  double loss = 0.0;
};

IterationResult dsl_iteration(EncoderNet<float>& net, const std::vector<Image>& clean_pool,
                              const degrade::RPool& r_pool, const EncoderConfig& cfg, Rng& it_rng) {
  const size_t src = static_cast<size_t>(it_rng.uniform_int(0, static_cast<int64_t>(clean_pool.size()) - 1));
  const degrade::SetS set_s = degrade::build_set_S(clean_pool[src], it_rng.next_u64());
  const degrade::SetR set_r = degrade::build_set_R(r_pool, it_rng.next_u64(), cfg.set_r_size);

  std::vector<const Image*> batch_images;
  for (const auto& [img, recipe] : set_s.members) batch_images.push_back(&img);
  for (const auto& [img, mos] : set_r.members) batch_images.push_back(&img);

  const auto batch = images_to_batch<float>(batch_images);
  const Mat<float> reps = net.forward(batch, /*train=*/true);
  const int m = static_cast<int>(set_s.members.size());
  const int n = static_cast<int>(set_r.members.size());
  const Mat<float> s_reps = reps.topRows(m);
  const Mat<float> r_reps = reps.bottomRows(n);

  const auto grads = degradation_extraction_loss_grad<float>(s_reps, r_reps, static_cast<float>(cfg.temperature),
                                                             cfg.include_positive);
  Mat<float> d_reps(m + n, reps.cols());
  d_reps.topRows(m) = grads.d_s;
  d_reps.bottomRows(n) = grads.d_r;
  net.backward(d_reps);
  return {static_cast<double>(grads.value)};
}

IterationResult patch_iteration(EncoderNet<float>& net, const degrade::RPool& pool, const EncoderConfig& cfg,
                                Rng& it_rng) {
  const int b = cfg.patch_batch_images;
  if (static_cast<int>(pool.images.size()) < b)
    fail(ErrorCode::InsufficientImages, "patch regime needs at least patch_batch_images images");
  std::vector<int> order(pool.images.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  it_rng.shuffle(order);

  std::vector<Image> crops;
  crops.reserve(static_cast<size_t>(2 * b));
  for (int i = 0; i < b; ++i) {
    const Image& img = pool.images[static_cast<size_t>(order[static_cast<size_t>(i)])];
    if (img.height() < cfg.patch_size || img.width() < cfg.patch_size)
      fail(ErrorCode::ImageTooSmall, "image smaller than the patch size");
    for (int c = 0; c < 2; ++c) {
      const int y0 = static_cast<int>(it_rng.uniform_int(0, img.height() - cfg.patch_size));
      const int x0 = static_cast<int>(it_rng.uniform_int(0, img.width() - cfg.patch_size));
      crops.push_back(crop(img, y0, x0, cfg.patch_size));
    }
  }
  std::vector<const Image*> batch_images;
  for (const auto& c : crops) batch_images.push_back(&c);
  const auto batch = images_to_batch<float>(batch_images);
  const Mat<float> reps = net.forward(batch, /*train=*/true);

  Mat<float> d_reps = Mat<float>::Zero(reps.rows(), reps.cols());
  double loss = 0.0;
  const float theta = static_cast<float>(cfg.temperature);
  for (int i = 0; i < b; ++i) {
    Mat<float> negatives(2 * (b - 1), reps.cols());
    std::vector<int> neg_rows;
    for (int j = 0; j < 2 * b; ++j)
      if (j / 2 != i) neg_rows.push_back(j);
    for (size_t t = 0; t < neg_rows.size(); ++t) negatives.row(static_cast<Eigen::Index>(t)) = reps.row(neg_rows[t]);

    const auto grads = patch_based_loss_grad<float>(reps.row(2 * i).transpose(), reps.row(2 * i + 1).transpose(),
                                                    negatives, theta, cfg.include_positive);
    const float w = 1.0f / static_cast<float>(b);
    loss += static_cast<double>(grads.value) * w;
    d_reps.row(2 * i) += w * grads.d_query.transpose();
    d_reps.row(2 * i + 1) += w * grads.d_positive.transpose();
    for (size_t t = 0; t < neg_rows.size(); ++t)
      d_reps.row(neg_rows[t]) += w * grads.d_negatives.row(static_cast<Eigen::Index>(t));
  }
  net.backward(d_reps);
  return {loss};
}

IterationResult naive_iteration(EncoderNet<float>& net, const std::vector<Image>& clean_pool,
                                const EncoderConfig& cfg, Rng& it_rng) {
  const int sources = std::max(2, cfg.naive_sources);
  if (static_cast<int>(clean_pool.size()) < sources)
    fail(ErrorCode::InsufficientImages, "naive regime needs at least naive_sources clean images");
  std::vector<int> order(clean_pool.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  it_rng.shuffle(order);

  // one shared recipe seed: positives are images under identical degradations
  const uint64_t recipe_seed = it_rng.next_u64();
  std::vector<degrade::SetS> sets;
  for (int s = 0; s < sources; ++s)
    sets.push_back(degrade::build_set_S(clean_pool[static_cast<size_t>(order[static_cast<size_t>(s)])], recipe_seed));

  std::vector<const Image*> batch_images;
  std::vector<int> families;
  for (const auto& set : sets) {
    for (const auto& [img, recipe] : set.members) {
      batch_images.push_back(&img);
      families.push_back(static_cast<int>(recipe.family));
    }
  }
  const auto batch = images_to_batch<float>(batch_images);
  const Mat<float> reps = net.forward(batch, /*train=*/true);
  const auto grads = naive_loss_grad<float>(reps, families, static_cast<float>(cfg.temperature));
  net.backward(grads.d_reps);
  return {static_cast<double>(grads.value)};
}

}  // namespace

TrainedEncoder train_encoder(Regime regime, const std::vector<Image>& clean_pool, const degrade::RPool& r_pool,
                             const EncoderConfig& config) {
  if (clean_pool.empty() && regime != Regime::kPatch)
    fail(ErrorCode::InsufficientImages, "training needs a non-empty clean pool");

  TrainedEncoder encoder;
  encoder.config = config;
  encoder.regime = regime_name(regime);

  Rng root(config.seed);
  encoder.net.init(config, root.split("init"));

  nn::Adam<float> opt(config.learning_rate);
  auto params = encoder.net.params();
  nn::zero_grads(params);

  for (int iter = 0; iter < config.iterations; ++iter) {
    Rng it_rng = root.split("iter").split(static_cast<uint64_t>(iter));
    IterationResult result;
    switch (regime) {
      case Regime::kDsl: result = dsl_iteration(encoder.net, clean_pool, r_pool, config, it_rng); break;
      case Regime::kPatch: result = patch_iteration(encoder.net, r_pool, config, it_rng); break;
      case Regime::kNaive: result = naive_iteration(encoder.net, clean_pool, config, it_rng); break;
    }
    if (!std::isfinite(result.loss))
      fail(ErrorCode::NonFiniteLoss, "non-finite loss at iteration " + std::to_string(iter));
    opt.step(params);
    nn::zero_grads(params);
    encoder.loss_log.emplace_back(iter, result.loss);
  }
  encoder.iterations_run = config.iterations;
  return encoder;
}

}  // namespace dslfiqa::dsl
