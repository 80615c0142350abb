#include "dslfiqa/dsl/encoder.hpp"

#include <cstdio>
#include <fstream>

namespace dslfiqa::dsl {

nlohmann::json EncoderConfig::to_json() const {
  return {{"input_size", input_size},
          {"channels", channels},
          {"strides", strides},
          {"repr_dim", repr_dim},
          {"mlp_hidden", mlp_hidden},
          {"learning_rate", learning_rate},
          {"iterations", iterations},
          {"temperature", temperature},
          {"set_s_size", set_s_size},
          {"set_r_size", set_r_size},
          {"seed", seed},
          {"include_positive", include_positive},
          {"leaky_slope", leaky_slope},
          {"patch_size", patch_size},
          {"patch_batch_images", patch_batch_images},
          {"naive_sources", naive_sources}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.input_size = j.value("input_size", c.input_size);
  c.channels = j.value("channels", c.channels);
  c.strides = j.value("strides", c.strides);
  c.repr_dim = j.value("repr_dim", c.repr_dim);
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.iterations = j.value("iterations", c.iterations);
  c.temperature = j.value("temperature", c.temperature);
  c.set_s_size = j.value("set_s_size", c.set_s_size);
  c.set_r_size = j.value("set_r_size", c.set_r_size);
  c.seed = j.value("seed", c.seed);
  c.include_positive = j.value("include_positive", c.include_positive);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.patch_size = j.value("patch_size", c.patch_size);
  c.patch_batch_images = j.value("patch_batch_images", c.patch_batch_images);
  c.naive_sources = j.value("naive_sources", c.naive_sources);
  return c;
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

Archive encoder_to_archive(TrainedEncoder& encoder) {
  Archive ar;
  ar.meta["kind"] = "degradation_encoder";
  ar.meta["config"] = encoder.config.to_json();
  ar.meta["regime"] = encoder.regime;
  ar.meta["iterations_run"] = encoder.iterations_run;
  for (const auto& p : encoder.net.params())
    ar.add(p.name, {p.value->rows(), p.value->cols()}, mat_to_vec(*p.value));
  for (const auto& [name, buf] : encoder.net.buffers()) ar.add(name, {buf->rows(), buf->cols()}, mat_to_vec(*buf));
  return ar;
}

TrainedEncoder encoder_from_archive(const Archive& archive) {
  if (archive.meta.value("kind", "") != "degradation_encoder")
    fail(ErrorCode::BadCheckpoint, "archive does not hold a degradation encoder");
  TrainedEncoder encoder;
  encoder.config = EncoderConfig::from_json(archive.meta.at("config"));
  encoder.regime = archive.meta.value("regime", "dsl");
  encoder.iterations_run = archive.meta.value("iterations_run", 0);
  encoder.net.init(encoder.config, Rng(0));
  for (const auto& p : encoder.net.params()) vec_to_mat(archive.get(p.name), *p.value);
  for (const auto& [name, buf] : encoder.net.buffers()) vec_to_mat(archive.get(name), *buf);
  return encoder;
}

void save_encoder(TrainedEncoder& encoder, const std::string& path) { encoder_to_archive(encoder).save(path); }

TrainedEncoder load_encoder(const std::string& path) { return encoder_from_archive(Archive::load(path)); }

void write_loss_log_csv(const std::string& path, const std::vector<std::pair<int, double>>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IOFailure, "cannot open '" + path + "' for writing");
  out << "iteration,loss\n";
  char buf[64];
  for (const auto& [it, loss] : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", it, loss);
    out << buf;
  }
  if (!out) fail(ErrorCode::IOFailure, "write failed for '" + path + "'");
}

}  // namespace dslfiqa::dsl
