#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "dslfiqa/core/image.hpp"
#include "dslfiqa/nn/layers.hpp"

namespace dslfiqa::iqa {

struct ModelConfig {
  int patch_input = 96;   // P, side length of one scored crop
  int token_size = 8;
  int embed_dim = 64;     // E
  int heads = 4;
  int refine_blocks = 2;
  int window = 4;         // tokens per window side
  int decoder_blocks = 1;
  int head_hidden = 64;
  int mlp_ratio = 2;
  int deg_dim = 128;      // conditioning representation width
  int landmark_bands = 6;
  int landmark_vocab = 68;
  bool use_landmarks = true;
  double charbonnier_eps = 1e-3;
  double learning_rate = 1e-5;
  int iterations = 100;   // optimization steps
  int batch = 16;
  uint64_t seed = 1;
  int ca_reduction = 4;

  int grid() const { return patch_input / token_size; }
  int tokens() const { return grid() * grid(); }
  int landmark_dim() const { return 2 * landmark_bands + 2; }

  void validate() const {
    if (patch_input % token_size != 0) fail(ErrorCode::BadConfig, "patch side must be divisible by token size");
    if (embed_dim % heads != 0) fail(ErrorCode::BadConfig, "embed dim must be divisible by heads");
    if (grid() % window != 0) fail(ErrorCode::BadConfig, "token grid must be divisible by the window size");
    if (charbonnier_eps <= 0.0) fail(ErrorCode::NonPositiveEpsilon, "charbonnier epsilon must be positive");
  }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Smooth outlier-robust regression loss sqrt((pred-gt)^2 + eps^2).
template <class S>
S charbonnier_loss(S pred, S gt, S eps) {
  if (eps <= S(0)) fail(ErrorCode::NonPositiveEpsilon, "charbonnier epsilon must be positive");
  const S d = pred - gt;
  return std::sqrt(d * d + eps * eps);
}

template <class S>
S charbonnier_loss_dpred(S pred, S gt, S eps) {
  const S d = pred - gt;
  return d / std::sqrt(d * d + eps * eps);
}

template <class S>
struct RegionalGridT {
  nn::Vec<S> scores;        // raw per-region scores, sigmoid maps them to (0,1)
  nn::Vec<S> confidences;   // raw per-region confidences, softmax turns them into weights
};

using RegionalGrid = RegionalGridT<float>;

// Confidence-weighted sum of sigmoided regional scores; lies strictly in (0,1).
template <class S>
S aggregate_score(const RegionalGridT<S>& grid) {
  if (grid.scores.size() == 0 || grid.scores.size() != grid.confidences.size())
    fail(ErrorCode::ShapeMismatch, "regional grid is empty or inconsistent");
  nn::Mat<S> logits = grid.confidences.transpose();
  const nn::Mat<S> w = nn::softmax_rows(logits);
  S mos = S(0);
  for (Eigen::Index t = 0; t < grid.scores.size(); ++t) mos += w(0, t) * nn::sigmoid(grid.scores(t));
  return mos;
}

// ---------------------------------------------------------------------------
// Windowed self-attention block (shifted on odd blocks)
// ---------------------------------------------------------------------------

template <class S>
struct SwinBlock {
  int grid = 0, window = 0, shift = 0;
  nn::LayerNorm<S> ln1, ln2;
  nn::MultiHeadAttention<S> attn;
  nn::Mlp<S> mlp;
  std::vector<int> perm;  // shifted token index -> original token index
  std::vector<nn::Mat<S>> masks;
  std::vector<nn::AttentionCache<S>> attn_caches;

  void init(int grid_, int window_, int shift_, int dim, int heads, int hidden, Rng& rng) {
    grid = grid_;
    window = window_;
    shift = shift_;
    ln1.init(dim);
    ln2.init(dim);
    attn.init(dim, heads, 0.02, rng, /*zero_output=*/true);
    mlp.init(dim, hidden, 0.02, rng, /*zero_output=*/true);

    perm.resize(static_cast<size_t>(grid) * grid);
    for (int y = 0; y < grid; ++y)
      for (int x = 0; x < grid; ++x)
        perm[static_cast<size_t>(y) * grid + x] = ((y + shift) % grid) * grid + ((x + shift) % grid);

    build_masks();
  }

  void build_masks() {
    masks.clear();
    const int nw_side = grid / window;
    if (shift == 0) {
      masks.assign(static_cast<size_t>(nw_side) * nw_side, nn::Mat<S>());
      return;
    }
    // Swin-style region ids: tokens that wrapped around during the cyclic
    // shift must not attend across the seam.
    const auto region = [&](int c) {
      if (c < grid - window) return 0;
      if (c < grid - shift) return 1;
      return 2;
    };
    std::vector<int> ids(static_cast<size_t>(grid) * grid);
    for (int y = 0; y < grid; ++y)
      for (int x = 0; x < grid; ++x) ids[static_cast<size_t>(y) * grid + x] = region(y) * 3 + region(x);
    // roll ids the same way the features are rolled
    std::vector<int> shifted_ids(ids.size());
    for (size_t t = 0; t < ids.size(); ++t) shifted_ids[t] = ids[static_cast<size_t>(perm[t])];

    for (int wy = 0; wy < nw_side; ++wy) {
      for (int wx = 0; wx < nw_side; ++wx) {
        nn::Mat<S> mask = nn::Mat<S>::Zero(window * window, window * window);
        std::vector<int> wnd_ids;
        for (int ly = 0; ly < window; ++ly)
          for (int lx = 0; lx < window; ++lx)
            wnd_ids.push_back(shifted_ids[static_cast<size_t>((wy * window + ly)) * grid + (wx * window + lx)]);
        for (int i = 0; i < window * window; ++i)
          for (int j = 0; j < window * window; ++j)
            if (wnd_ids[static_cast<size_t>(i)] != wnd_ids[static_cast<size_t>(j)]) mask(i, j) = static_cast<S>(-1e9);
        masks.push_back(std::move(mask));
      }
    }
  }

  nn::Mat<S> forward(const nn::Mat<S>& x) {
    const int t_count = grid * grid;
    const int wsz = window * window;
    const int nw_side = grid / window;
    nn::Mat<S> h = ln1.forward(x);
    nn::Mat<S> hs(t_count, x.cols());
    for (int t = 0; t < t_count; ++t) hs.row(t) = h.row(perm[static_cast<size_t>(t)]);

    attn_caches.assign(static_cast<size_t>(nw_side) * nw_side, nn::AttentionCache<S>());
    nn::Mat<S> out_s(t_count, x.cols());
    for (int wy = 0; wy < nw_side; ++wy) {
      for (int wx = 0; wx < nw_side; ++wx) {
        const size_t wi = static_cast<size_t>(wy) * nw_side + wx;
        nn::Mat<S> wnd(wsz, x.cols());
        for (int ly = 0; ly < window; ++ly)
          for (int lx = 0; lx < window; ++lx)
            wnd.row(ly * window + lx) = hs.row((wy * window + ly) * grid + (wx * window + lx));
        const nn::Mat<S> wnd_out = attn.forward(wnd, wnd, masks[wi], attn_caches[wi]);
        for (int ly = 0; ly < window; ++ly)
          for (int lx = 0; lx < window; ++lx)
            out_s.row((wy * window + ly) * grid + (wx * window + lx)) = wnd_out.row(ly * window + lx);
      }
    }
    nn::Mat<S> attn_out(t_count, x.cols());
    for (int t = 0; t < t_count; ++t) attn_out.row(perm[static_cast<size_t>(t)]) = out_s.row(t);

    nn::Mat<S> x1 = x + attn_out;
    return x1 + mlp.forward(ln2.forward(x1));
  }

  nn::Mat<S> backward(const nn::Mat<S>& gy) {
    const int t_count = grid * grid;
    const int wsz = window * window;
    const int nw_side = grid / window;
    nn::Mat<S> gx1 = gy + ln2.backward(mlp.backward(gy));

    nn::Mat<S> gout_s(t_count, gy.cols());
    for (int t = 0; t < t_count; ++t) gout_s.row(t) = gx1.row(perm[static_cast<size_t>(t)]);
    nn::Mat<S> ghs = nn::Mat<S>::Zero(t_count, gy.cols());
    for (int wy = 0; wy < nw_side; ++wy) {
      for (int wx = 0; wx < nw_side; ++wx) {
        const size_t wi = static_cast<size_t>(wy) * nw_side + wx;
        nn::Mat<S> gwnd(wsz, gy.cols());
        for (int ly = 0; ly < window; ++ly)
          for (int lx = 0; lx < window; ++lx)
            gwnd.row(ly * window + lx) = gout_s.row((wy * window + ly) * grid + (wx * window + lx));
        auto [gq, gkv] = attn.backward(gwnd, attn_caches[wi]);
        const nn::Mat<S> gw = gq + gkv;
        for (int ly = 0; ly < window; ++ly)
          for (int lx = 0; lx < window; ++lx)
            ghs.row((wy * window + ly) * grid + (wx * window + lx)) += gw.row(ly * window + lx);
      }
    }
    nn::Mat<S> gh(t_count, gy.cols());
    for (int t = 0; t < t_count; ++t) gh.row(perm[static_cast<size_t>(t)]) = ghs.row(t);
    return gx1 + ln1.backward(gh);
  }

  void collect(nn::ParamList<S>& out, const std::string& prefix) {
    ln1.collect(out, prefix + ".ln1");
    ln2.collect(out, prefix + ".ln2");
    attn.collect(out, prefix + ".attn");
    mlp.collect(out, prefix + ".mlp");
  }
};

// ---------------------------------------------------------------------------
// Transformer decoder block conditioning tokens on the degradation context
// ---------------------------------------------------------------------------

template <class S>
struct DecoderBlock {
  nn::LayerNorm<S> ln1, ln2;
  nn::MultiHeadAttention<S> attn;
  nn::Mlp<S> mlp;
  nn::AttentionCache<S> attn_cache;
  nn::Mat<S> ctx_grad;

  void init(int dim, int heads, int hidden, Rng& rng) {
    ln1.init(dim);
    ln2.init(dim);
    attn.init(dim, heads, 0.02, rng, /*zero_output=*/true);
    mlp.init(dim, hidden, 0.02, rng, /*zero_output=*/true);
  }

  nn::Mat<S> forward(const nn::Mat<S>& x, const nn::Mat<S>& ctx) {
    const nn::Mat<S> h = ln1.forward(x);
    const nn::Mat<S> empty_mask;
    nn::Mat<S> x1 = x + attn.forward(h, ctx, empty_mask, attn_cache);
    return x1 + mlp.forward(ln2.forward(x1));
  }

  nn::Mat<S> backward(const nn::Mat<S>& gy) {
    nn::Mat<S> gx1 = gy + ln2.backward(mlp.backward(gy));
    auto [gq, gctx] = attn.backward(gx1, attn_cache);
    ctx_grad = gctx;
    return gx1 + ln1.backward(gq);
  }

  void collect(nn::ParamList<S>& out, const std::string& prefix) {
    ln1.collect(out, prefix + ".ln1");
    ln2.collect(out, prefix + ".ln2");
    attn.collect(out, prefix + ".attn");
    mlp.collect(out, prefix + ".mlp");
  }
};

template <class S>
struct Head {
  nn::Dense<S> fc1, fc2;
  nn::Gelu<S> act;

  void init(int in, int hidden, double stddev, Rng& rng) {
    fc1.init(in, hidden, stddev, rng);
    fc2.init(hidden, 1, stddev, rng);
  }

  nn::Mat<S> forward(const nn::Mat<S>& x) { return fc2.forward(act.forward(fc1.forward(x))); }
  nn::Mat<S> backward(const nn::Mat<S>& gy) { return fc1.backward(act.backward(fc2.backward(gy))); }

  void collect(nn::ParamList<S>& out, const std::string& prefix) {
    fc1.collect(out, prefix + ".fc1");
    fc2.collect(out, prefix + ".fc2");
  }
};

// ---------------------------------------------------------------------------
// The quality regressor for one crop
// ---------------------------------------------------------------------------

template <class S>
struct GfiqaModel {
  ModelConfig cfg;
  nn::Dense<S> embed;           // (3 * token_size^2) -> E
  nn::Mat<S> pos, gpos;         // T x E learned positional table
  nn::ChannelAttention<S> ca;
  std::vector<SwinBlock<S>> blocks;
  nn::Dense<S> deg_proj;        // deg_dim -> E
  std::vector<DecoderBlock<S>> decoders;
  Head<S> score_head;
  Head<S> conf_head;

  // per-crop caches
  nn::Vec<S> agg_weights_cache, agg_sig_cache;
  nn::Mat<S> lm_broadcast_cache;

  void init(const ModelConfig& config, Rng rng) {
    config.validate();
    cfg = config;
    Rng embed_rng = rng.split("embed");
    embed.init(3 * cfg.token_size * cfg.token_size, cfg.embed_dim, 0.02, embed_rng);
    pos.resize(cfg.tokens(), cfg.embed_dim);
    Rng pos_rng = rng.split("pos");
    nn::init_trunc_normal(pos, 0.02, pos_rng);
    gpos = nn::Mat<S>::Zero(cfg.tokens(), cfg.embed_dim);
    Rng ca_rng = rng.split("ca");
    ca.init(cfg.embed_dim, cfg.ca_reduction, 0.02, ca_rng);
    blocks.resize(static_cast<size_t>(cfg.refine_blocks));
    for (int i = 0; i < cfg.refine_blocks; ++i) {
      Rng blk_rng = rng.split("swin").split(static_cast<uint64_t>(i));
      blocks[static_cast<size_t>(i)].init(cfg.grid(), cfg.window, (i % 2 == 1) ? cfg.window / 2 : 0, cfg.embed_dim,
                                          cfg.heads, cfg.mlp_ratio * cfg.embed_dim, blk_rng);
    }
    Rng proj_rng = rng.split("deg_proj");
    deg_proj.init(cfg.deg_dim, cfg.embed_dim, 0.02, proj_rng);
    decoders.resize(static_cast<size_t>(cfg.decoder_blocks));
    for (int i = 0; i < cfg.decoder_blocks; ++i) {
      Rng dec_rng = rng.split("decoder").split(static_cast<uint64_t>(i));
      decoders[static_cast<size_t>(i)].init(cfg.embed_dim, cfg.heads, cfg.mlp_ratio * cfg.embed_dim, dec_rng);
    }
    Rng score_rng = rng.split("score_head");
    score_head.init(cfg.embed_dim, cfg.head_hidden, 0.02, score_rng);
    Rng conf_rng = rng.split("conf_head");
    conf_head.init(cfg.embed_dim + cfg.landmark_dim(), cfg.head_hidden, 0.02, conf_rng);
  }

  // Rearranges a crop into per-token pixel rows (token-major, then
  // (dy, dx, channel) within the row).
  nn::Mat<S> tokenize(const Image& crop) const {
    if (crop.height() != cfg.patch_input || crop.width() != cfg.patch_input)
      fail(ErrorCode::ShapeMismatch, "crop does not match the model's patch size");
    const int ts = cfg.token_size, g = cfg.grid();
    nn::Mat<S> patches(cfg.tokens(), 3 * ts * ts);
    for (int gy = 0; gy < g; ++gy)
      for (int gx = 0; gx < g; ++gx) {
        const int t = gy * g + gx;
        for (int dy = 0; dy < ts; ++dy)
          for (int dx = 0; dx < ts; ++dx) {
            const int y = gy * ts + dy, x = gx * ts + dx;
            const int c0 = (dy * ts + dx) * 3;
            patches(t, c0 + 0) = static_cast<S>(crop.r(y, x));
            patches(t, c0 + 1) = static_cast<S>(crop.g(y, x));
            patches(t, c0 + 2) = static_cast<S>(crop.b(y, x));
          }
      }
    return patches;
  }

  nn::Mat<S> extract_features(const Image& crop) { return embed.forward(tokenize(crop)) + pos; }

  nn::Mat<S> channel_attention(const nn::Mat<S>& tokens) { return ca.forward(tokens); }

  nn::Mat<S> refine(const nn::Mat<S>& tokens) {
    nn::Mat<S> x = tokens;
    for (auto& blk : blocks) x = blk.forward(x);
    return x;
  }

  nn::Mat<S> cross_attention_decode(const nn::Mat<S>& tokens, const nn::Vec<S>& deg_rep) {
    if (deg_rep.size() != cfg.deg_dim)
      fail(ErrorCode::DimensionMismatch, "degradation representation width does not match the model");
    const nn::Mat<S> ctx = deg_proj.forward(deg_rep.transpose());
    nn::Mat<S> x = tokens;
    for (auto& dec : decoders) x = dec.forward(x, ctx);
    return x;
  }

  RegionalGridT<S> predict_regional(const nn::Mat<S>& tokens, const nn::Vec<S>& landmark_vec) {
    if (landmark_vec.size() != cfg.landmark_dim())
      fail(ErrorCode::DimensionMismatch, "landmark vector width does not match the model");
    RegionalGridT<S> grid;
    grid.scores = score_head.forward(tokens).col(0);
    lm_broadcast_cache.resize(tokens.rows(), cfg.embed_dim + cfg.landmark_dim());
    lm_broadcast_cache.leftCols(cfg.embed_dim) = tokens;
    lm_broadcast_cache.rightCols(cfg.landmark_dim()).rowwise() = landmark_vec.transpose();
    grid.confidences = conf_head.forward(lm_broadcast_cache).col(0);
    return grid;
  }

  // Full forward for one crop; caches everything backward_crop needs.
  S forward_crop(const Image& crop, const nn::Vec<S>& deg_rep, const nn::Vec<S>& landmark_vec,
                 RegionalGridT<S>* grid_out = nullptr) {
    nn::Mat<S> x = extract_features(crop);
    x = ca.forward(x);
    for (auto& blk : blocks) x = blk.forward(x);
    x = cross_attention_decode(x, deg_rep);
    const RegionalGridT<S> grid = predict_regional(x, landmark_vec);
    if (grid_out) *grid_out = grid;

    nn::Mat<S> logits = grid.confidences.transpose();
    agg_weights_cache = nn::softmax_rows(logits).row(0).transpose();
    agg_sig_cache = grid.scores.unaryExpr([](S v) { return nn::sigmoid(v); });
    return agg_weights_cache.dot(agg_sig_cache);
  }

  // Accumulates parameter gradients for d(loss)/d(patch_mos) = d_mos.
  void backward_crop(S d_mos) {
    const Eigen::Index t_count = agg_sig_cache.size();
    nn::Vec<S> d_sig = d_mos * agg_weights_cache;
    nn::Mat<S> d_weights = (d_mos * agg_sig_cache).transpose();
    nn::Mat<S> w_row = agg_weights_cache.transpose();
    nn::Vec<S> d_conf = nn::softmax_rows_backward(w_row, d_weights).row(0).transpose();
    nn::Vec<S> d_scores(t_count);
    for (Eigen::Index t = 0; t < t_count; ++t)
      d_scores(t) = d_sig(t) * agg_sig_cache(t) * (S(1) - agg_sig_cache(t));

    nn::Mat<S> gtokens = score_head.backward(d_scores);
    const nn::Mat<S> gconf_in = conf_head.backward(d_conf);
    gtokens += gconf_in.leftCols(cfg.embed_dim);

    for (size_t i = decoders.size(); i-- > 0;) {
      gtokens = decoders[i].backward(gtokens);
      deg_proj.backward(decoders[i].ctx_grad);  // conditioning path; encoder itself stays frozen
    }
    for (size_t i = blocks.size(); i-- > 0;) gtokens = blocks[i].backward(gtokens);
    gtokens = ca.backward(gtokens);
    gpos += gtokens;
    embed.backward(gtokens);
  }

  nn::ParamList<S> params() {
    nn::ParamList<S> out;
    embed.collect(out, "embed");
    out.push_back({"pos", &pos, &gpos});
    ca.collect(out, "ca");
    for (size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(out, "swin" + std::to_string(i));
    deg_proj.collect(out, "deg_proj");
    for (size_t i = 0; i < decoders.size(); ++i) decoders[i].collect(out, "decoder" + std::to_string(i));
    score_head.collect(out, "score_head");
    conf_head.collect(out, "conf_head");
    return out;
  }
};

}  // namespace dslfiqa::iqa
