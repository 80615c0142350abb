#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dslfiqa/core/archive.hpp"
#include "dslfiqa/core/image.hpp"
#include "dslfiqa/core/sha1.hpp"
#include "dslfiqa/nn/layers.hpp"

namespace dslfiqa::dsl {

struct EncoderConfig {
  int input_size = 64;  // training image side; inference accepts any side >= min_input()
  std::vector<int> channels = {8, 16, 16, 32, 32, 32};
  std::vector<int> strides = {1, 2, 1, 2, 1, 2};
  int repr_dim = 128;
  int mlp_hidden = 64;
  double learning_rate = 3e-5;
  int iterations = 300;
  double temperature = 1.0;
  int set_s_size = 16;
  int set_r_size = 256;
  uint64_t seed = 1;
  bool include_positive = false;  // denominator variant of the contrastive loss
  double leaky_slope = 0.01;
  // patch regime
  int patch_size = 32;
  int patch_batch_images = 8;
  // naive regime
  int naive_sources = 2;

  int min_input() const {
    int factor = 1;
    for (const int s : strides) factor *= s;
    return factor;
  }

  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

// Six 3x3 convolution blocks (batch norm + leaky ReLU, stride-2 every other
// block), global average pooling, and a two-layer MLP head producing the
// degradation representation.
template <class S>
struct EncoderNet {
  EncoderConfig cfg;
  std::vector<nn::Conv2d<S>> convs;
  std::vector<nn::BatchNorm<S>> bns;
  std::vector<nn::LeakyRelu<S>> acts;
  nn::GlobalAvgPool<S> pool;
  nn::Dense<S> fc1, fc2;
  nn::LeakyRelu<S> mlp_act;
  int pooled_h = 0, pooled_w = 0;

  void init(const EncoderConfig& config, Rng rng) {
    cfg = config;
    if (cfg.channels.size() != cfg.strides.size() || cfg.channels.empty())
      fail(ErrorCode::BadConfig, "encoder channels and strides lists disagree");
    convs.clear();
    bns.clear();
    acts.clear();
    int in_c = 3;
    for (size_t i = 0; i < cfg.channels.size(); ++i) {
      nn::Conv2d<S> conv;
      conv.init(in_c, cfg.channels[i], 3, cfg.strides[i], rng);
      convs.push_back(std::move(conv));
      nn::BatchNorm<S> bn;
      bn.init(cfg.channels[i]);
      bns.push_back(std::move(bn));
      acts.push_back(nn::LeakyRelu<S>(static_cast<S>(cfg.leaky_slope)));
      in_c = cfg.channels[i];
    }
    Rng fc1_rng = rng.split("fc1");
    Rng fc2_rng = rng.split("fc2");
    fc1.init(in_c, cfg.mlp_hidden, std::sqrt(2.0 / in_c), fc1_rng);
    fc2.init(cfg.mlp_hidden, cfg.repr_dim, std::sqrt(2.0 / cfg.mlp_hidden), fc2_rng);
    mlp_act = nn::LeakyRelu<S>(static_cast<S>(cfg.leaky_slope));
  }

  // batch.data rows hold RGB channel vectors; returns one representation row
  // per sample.
  nn::Mat<S> forward(const nn::TensorMap<S>& batch, bool train) {
    if (batch.c != 3) fail(ErrorCode::ShapeMismatch, "encoder expects 3-channel input");
    if (batch.h < cfg.min_input() || batch.w < cfg.min_input())
      fail(ErrorCode::ShapeMismatch, "encoder input smaller than its downsampling factor");
    nn::TensorMap<S> x = batch;
    for (size_t i = 0; i < convs.size(); ++i) {
      x = convs[i].forward(x);
      x.data = bns[i].forward(x.data, train);
      x.data = acts[i].forward(x.data);
    }
    pooled_h = x.h;
    pooled_w = x.w;
    return fc2.forward(mlp_act.forward(fc1.forward(pool.forward(x))));
  }

  void backward(const nn::Mat<S>& d_reps) {
    nn::Mat<S> g = fc1.backward(mlp_act.backward(fc2.backward(d_reps)));
    nn::TensorMap<S> gx = pool.backward(g, pooled_h, pooled_w);
    for (size_t i = convs.size(); i-- > 0;) {
      gx.data = acts[i].backward(gx.data);
      gx.data = bns[i].backward(gx.data);
      gx = convs[i].backward(gx);
    }
  }

  nn::ParamList<S> params() {
    nn::ParamList<S> out;
    for (size_t i = 0; i < convs.size(); ++i) {
      const std::string p = "conv" + std::to_string(i);
      convs[i].collect(out, p);
      bns[i].collect(out, p + ".bn");
    }
    fc1.collect(out, "fc1");
    fc2.collect(out, "fc2");
    return out;
  }

  std::vector<std::pair<std::string, nn::Mat<S>*>> buffers() {
    std::vector<std::pair<std::string, nn::Mat<S>*>> out;
    for (size_t i = 0; i < bns.size(); ++i) {
      out.emplace_back("conv" + std::to_string(i) + ".bn.running_mean", &bns[i].running_mean);
      out.emplace_back("conv" + std::to_string(i) + ".bn.running_var", &bns[i].running_var);
    }
    return out;
  }
};

// Converts images (all sharing one size) into an encoder input batch.
template <class S>
nn::TensorMap<S> images_to_batch(const std::vector<const Image*>& images) {
  if (images.empty()) fail(ErrorCode::ShapeMismatch, "empty image batch");
  const int h = images[0]->height(), w = images[0]->width();
  nn::TensorMap<S> batch;
  batch.resize(static_cast<int>(images.size()), h, w, 3);
  for (size_t s = 0; s < images.size(); ++s) {
    const Image& img = *images[s];
    if (img.height() != h || img.width() != w) fail(ErrorCode::ShapeMismatch, "image batch sizes disagree");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Eigen::Index row = (static_cast<Eigen::Index>(s) * h + y) * w + x;
        batch.data(row, 0) = static_cast<S>(img.r(y, x));
        batch.data(row, 1) = static_cast<S>(img.g(y, x));
        batch.data(row, 2) = static_cast<S>(img.b(y, x));
      }
  }
  return batch;
}

struct TrainedEncoder {
  EncoderNet<float> net;
  EncoderConfig config;
  std::string regime = "dsl";
  int iterations_run = 0;
  std::vector<std::pair<int, double>> loss_log;

  Eigen::VectorXf encode(const Image& image) {
    require_valid(image, "encode_degradation");
    std::vector<const Image*> one{&image};
    const auto batch = images_to_batch<float>(one);
    return net.forward(batch, /*train=*/false).row(0).transpose();
  }
};

// Deterministic representation of an image's degradation; inference-mode
// statistics, identical inputs produce identical vectors.
inline Eigen::VectorXf encode_degradation(TrainedEncoder& encoder, const Image& image) {
  return encoder.encode(image);
}

template <class S>
std::string state_hash(EncoderNet<S>& net) {
  Sha1 sha;
  for (const auto& p : net.params()) {
    for (Eigen::Index j = 0; j < p.value->cols(); ++j)
      for (Eigen::Index i = 0; i < p.value->rows(); ++i) {
        const double v = static_cast<double>((*p.value)(i, j));
        sha.update(&v, sizeof(v));
      }
  }
  for (const auto& [name, buf] : net.buffers()) {
    (void)name;
    for (Eigen::Index j = 0; j < buf->cols(); ++j)
      for (Eigen::Index i = 0; i < buf->rows(); ++i) {
        const double v = static_cast<double>((*buf)(i, j));
        sha.update(&v, sizeof(v));
      }
  }
  return sha.hex_digest();
}

Archive encoder_to_archive(TrainedEncoder& encoder);
TrainedEncoder encoder_from_archive(const Archive& archive);
void save_encoder(TrainedEncoder& encoder, const std::string& path);
TrainedEncoder load_encoder(const std::string& path);

void write_loss_log_csv(const std::string& path, const std::vector<std::pair<int, double>>& log);

}  // namespace dslfiqa::dsl
