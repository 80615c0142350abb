#pragma once

#include "dslfiqa/nn/common.hpp"

namespace dslfiqa::nn {

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

template <class S>
struct Dense {
  Mat<S> w, gw;   // in x out
  Mat<S> b, gb;   // out x 1
  Mat<S> x_cache;

  void init(int in, int out, double stddev, Rng& rng) {
    w.resize(in, out);
    init_trunc_normal(w, stddev, rng);
    b = Mat<S>::Zero(out, 1);
    gw = Mat<S>::Zero(in, out);
    gb = Mat<S>::Zero(out, 1);
  }

  void init_zero(int in, int out) {
    w = Mat<S>::Zero(in, out);
    b = Mat<S>::Zero(out, 1);
    gw = Mat<S>::Zero(in, out);
    gb = Mat<S>::Zero(out, 1);
  }

  Mat<S> forward(const Mat<S>& x) {
    x_cache = x;
    return (x * w).rowwise() + b.col(0).transpose();
  }

  Mat<S> backward(const Mat<S>& gy) {
    gw.noalias() += x_cache.transpose() * gy;
    gb.col(0).noalias() += gy.colwise().sum().transpose();
    return gy * w.transpose();
  }

  void collect(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
  }
};

// ---------------------------------------------------------------------------
// LayerNorm over each row
// ---------------------------------------------------------------------------

template <class S>
struct LayerNorm {
  Mat<S> gamma, ggamma;  // 1 x C
  Mat<S> beta, gbeta;    // 1 x C
  Mat<S> xhat;
  Vec<S> inv_std;
  S eps = static_cast<S>(1e-5);

  void init(int dim) {
    gamma = Mat<S>::Ones(1, dim);
    beta = Mat<S>::Zero(1, dim);
    ggamma = Mat<S>::Zero(1, dim);
    gbeta = Mat<S>::Zero(1, dim);
  }

  Mat<S> forward(const Mat<S>& x) {
    const Eigen::Index n = x.rows(), c = x.cols();
    xhat.resize(n, c);
    inv_std.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const S mu = x.row(i).mean();
      const S var = (x.row(i).array() - mu).square().mean();
      inv_std(i) = S(1) / std::sqrt(var + eps);
      xhat.row(i) = (x.row(i).array() - mu).matrix() * inv_std(i);
    }
    return (xhat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
  }

  Mat<S> backward(const Mat<S>& gy) {
    const Eigen::Index n = gy.rows(), c = gy.cols();
    ggamma.row(0).noalias() += (gy.cwiseProduct(xhat)).colwise().sum();
    gbeta.row(0).noalias() += gy.colwise().sum();
    Mat<S> gx(n, c);
    const S inv_c = S(1) / static_cast<S>(c);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Array<S, 1, Eigen::Dynamic> gh = gy.row(i).array() * gamma.row(0).array();
      const S mean_gh = gh.mean();
      const S mean_gh_xhat = (gh * xhat.row(i).array()).mean();
      gx.row(i) = ((gh - mean_gh - xhat.row(i).array() * mean_gh_xhat) * inv_std(i)).matrix();
      (void)inv_c;
    }
    return gx;
  }

  void collect(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".gamma", &gamma, &ggamma});
    out.push_back({prefix + ".beta", &beta, &gbeta});
  }
};

// ---------------------------------------------------------------------------
// BatchNorm over rows (shared column statistics)
// ---------------------------------------------------------------------------

template <class S>
struct BatchNorm {
  Mat<S> gamma, ggamma;  // 1 x C
  Mat<S> beta, gbeta;
  Mat<S> running_mean, running_var;  // 1 x C
  Mat<S> xhat;
  Eigen::Array<S, 1, Eigen::Dynamic> inv_std;
  S eps = static_cast<S>(1e-5);
  S momentum = static_cast<S>(0.1);

  void init(int dim) {
    gamma = Mat<S>::Ones(1, dim);
    beta = Mat<S>::Zero(1, dim);
    ggamma = Mat<S>::Zero(1, dim);
    gbeta = Mat<S>::Zero(1, dim);
    running_mean = Mat<S>::Zero(1, dim);
    running_var = Mat<S>::Ones(1, dim);
  }

  Mat<S> forward(const Mat<S>& x, bool train) {
    const Eigen::Index n = x.rows();
    Eigen::Array<S, 1, Eigen::Dynamic> mean, var;
    if (train) {
      mean = x.colwise().mean().array();
      var = (x.rowwise() - mean.matrix()).array().square().colwise().mean();
      running_mean.array() = (S(1) - momentum) * running_mean.array() + momentum * mean;
      running_var.array() = (S(1) - momentum) * running_var.array() + momentum * var;
    } else {
      mean = running_mean.row(0).array();
      var = running_var.row(0).array();
    }
    inv_std = (var + eps).sqrt().inverse();
    xhat = ((x.rowwise() - mean.matrix()).array().rowwise() * inv_std).matrix();
    (void)n;
    return (xhat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
  }

  // Backward through batch statistics (training mode only).
  Mat<S> backward(const Mat<S>& gy) {
    const Eigen::Index n = gy.rows();
    ggamma.row(0).noalias() += (gy.cwiseProduct(xhat)).colwise().sum();
    gbeta.row(0).noalias() += gy.colwise().sum();
    const Mat<S> gxhat = gy.array().rowwise() * gamma.row(0).array();
    const Eigen::Array<S, 1, Eigen::Dynamic> sum_gxhat = gxhat.colwise().sum().array();
    const Eigen::Array<S, 1, Eigen::Dynamic> sum_gxhat_xhat = (gxhat.cwiseProduct(xhat)).colwise().sum().array();
    const S inv_n = S(1) / static_cast<S>(n);
    Mat<S> gx = (gxhat.array() * static_cast<S>(n)).matrix();
    gx.array().rowwise() -= sum_gxhat;
    gx.array() -= xhat.array().rowwise() * sum_gxhat_xhat;
    gx.array().rowwise() *= inv_std * inv_n;
    return gx;
  }

  void collect(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".gamma", &gamma, &ggamma});
    out.push_back({prefix + ".beta", &beta, &gbeta});
  }
};

// ---------------------------------------------------------------------------
// Feature maps and convolution
// ---------------------------------------------------------------------------

// Batch of dense feature maps: row (sample*h + y)*w + x holds the channel
// vector at (y, x) of one sample.
template <class S>
struct TensorMap {
  int n = 0, h = 0, w = 0, c = 0;
  Mat<S> data;

  void resize(int n_, int h_, int w_, int c_) {
    n = n_;
    h = h_;
    w = w_;
    c = c_;
    data.setZero(static_cast<Eigen::Index>(n) * h * w, c);
  }
};

template <class S>
struct Conv2d {
  int in_c = 0, out_c = 0, k = 3, stride = 1, pad = 1;
  Mat<S> w, gw;  // (k*k*in_c) x out_c
  Mat<S> b, gb;  // out_c x 1
  Mat<S> cols_cache;
  int n_cache = 0, h_cache = 0, w_cache = 0, ho_cache = 0, wo_cache = 0;

  void init(int in_channels, int out_channels, int kernel, int stride_, Rng& rng) {
    in_c = in_channels;
    out_c = out_channels;
    k = kernel;
    stride = stride_;
    pad = kernel / 2;
    const int fan_in = k * k * in_c;
    w.resize(fan_in, out_c);
    init_trunc_normal(w, std::sqrt(2.0 / fan_in), rng);
    b = Mat<S>::Zero(out_c, 1);
    gw = Mat<S>::Zero(fan_in, out_c);
    gb = Mat<S>::Zero(out_c, 1);
  }

  TensorMap<S> forward(const TensorMap<S>& x) {
    n_cache = x.n;
    h_cache = x.h;
    w_cache = x.w;
    const int ho = (x.h + 2 * pad - k) / stride + 1;
    const int wo = (x.w + 2 * pad - k) / stride + 1;
    ho_cache = ho;
    wo_cache = wo;
    cols_cache.setZero(static_cast<Eigen::Index>(x.n) * ho * wo, k * k * in_c);
    for (int s = 0; s < x.n; ++s) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          const Eigen::Index row = (static_cast<Eigen::Index>(s) * ho + oy) * wo + ox;
          for (int dy = 0; dy < k; ++dy) {
            const int y = oy * stride + dy - pad;
            if (y < 0 || y >= x.h) continue;
            for (int dx = 0; dx < k; ++dx) {
              const int xx = ox * stride + dx - pad;
              if (xx < 0 || xx >= x.w) continue;
              const Eigen::Index src = (static_cast<Eigen::Index>(s) * x.h + y) * x.w + xx;
              cols_cache.block(row, (dy * k + dx) * in_c, 1, in_c) = x.data.row(src);
            }
          }
        }
      }
    }
    TensorMap<S> y;
    y.n = x.n;
    y.h = ho;
    y.w = wo;
    y.c = out_c;
    y.data = (cols_cache * w).rowwise() + b.col(0).transpose();
    return y;
  }

  TensorMap<S> backward(const TensorMap<S>& gy) {
    gw.noalias() += cols_cache.transpose() * gy.data;
    gb.col(0).noalias() += gy.data.colwise().sum().transpose();
    const Mat<S> gcols = gy.data * w.transpose();
    TensorMap<S> gx;
    gx.resize(n_cache, h_cache, w_cache, in_c);
    for (int s = 0; s < n_cache; ++s) {
      for (int oy = 0; oy < ho_cache; ++oy) {
        for (int ox = 0; ox < wo_cache; ++ox) {
          const Eigen::Index row = (static_cast<Eigen::Index>(s) * ho_cache + oy) * wo_cache + ox;
          for (int dy = 0; dy < k; ++dy) {
            const int y = oy * stride + dy - pad;
            if (y < 0 || y >= h_cache) continue;
            for (int dx = 0; dx < k; ++dx) {
              const int xx = ox * stride + dx - pad;
              if (xx < 0 || xx >= w_cache) continue;
              const Eigen::Index dst = (static_cast<Eigen::Index>(s) * h_cache + y) * w_cache + xx;
              gx.data.block(dst, 0, 1, in_c) += gcols.block(row, (dy * k + dx) * in_c, 1, in_c);
            }
          }
        }
      }
    }
    return gx;
  }

  void collect(ParamList<S>& out, const std::string& prefix) {
    out.push_back({prefix + ".w", &w, &gw});
    out.push_back({prefix + ".b", &b, &gb});
  }
};

template <class S>
struct GlobalAvgPool {
  int n_cache = 0, hw_cache = 0;

  Mat<S> forward(const TensorMap<S>& x) {
    n_cache = x.n;
    hw_cache = x.h * x.w;
    Mat<S> y = Mat<S>::Zero(x.n, x.c);
    for (int s = 0; s < x.n; ++s)
      y.row(s) = x.data.middleRows(static_cast<Eigen::Index>(s) * hw_cache, hw_cache).colwise().mean();
    return y;
  }

  TensorMap<S> backward(const Mat<S>& gy, int h, int w) const {
    TensorMap<S> gx;
    gx.resize(n_cache, h, w, static_cast<int>(gy.cols()));
    const S inv = S(1) / static_cast<S>(hw_cache);
    for (int s = 0; s < n_cache; ++s)
      gx.data.middleRows(static_cast<Eigen::Index>(s) * hw_cache, hw_cache).rowwise() = gy.row(s) * inv;
    return gx;
  }
};

// ---------------------------------------------------------------------------
// Multi-head attention with external per-call caches
// ---------------------------------------------------------------------------

template <class S>
struct AttentionCache {
  Mat<S> q_in, kv_in;
  Mat<S> q, k, v;                 // projected, full width
  std::vector<Mat<S>> attn;       // per head, Tq x Tk
  Mat<S> ctx;                     // Tq x E before the output projection
};

template <class S>
struct MultiHeadAttention {
  int dim = 0, heads = 1;
  Dense<S> wq, wk, wv, wo;

  void init(int dim_, int heads_, double stddev, Rng& rng, bool zero_output) {
    dim = dim_;
    heads = heads_;
    if (dim % heads != 0) fail(ErrorCode::BadConfig, "attention dim must be divisible by heads");
    wq.init(dim, dim, stddev, rng);
    wk.init(dim, dim, stddev, rng);
    wv.init(dim, dim, stddev, rng);
    if (zero_output)
      wo.init_zero(dim, dim);
    else
      wo.init(dim, dim, stddev, rng);
  }

  // mask: empty or Tq x Tk additive logits mask.
  Mat<S> forward(const Mat<S>& q_in, const Mat<S>& kv_in, const Mat<S>& mask, AttentionCache<S>& cache) {
    cache.q_in = q_in;
    cache.kv_in = kv_in;
    cache.q = (q_in * wq.w).rowwise() + wq.b.col(0).transpose();
    cache.k = (kv_in * wk.w).rowwise() + wk.b.col(0).transpose();
    cache.v = (kv_in * wv.w).rowwise() + wv.b.col(0).transpose();
    const int dh = dim / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));
    cache.attn.assign(static_cast<size_t>(heads), Mat<S>());
    cache.ctx.resize(q_in.rows(), dim);
    for (int h = 0; h < heads; ++h) {
      const auto qh = cache.q.middleCols(h * dh, dh);
      const auto kh = cache.k.middleCols(h * dh, dh);
      const auto vh = cache.v.middleCols(h * dh, dh);
      Mat<S> scores = qh * kh.transpose() * scale;
      if (mask.size() > 0) scores += mask;
      cache.attn[static_cast<size_t>(h)] = softmax_rows(scores);
      cache.ctx.middleCols(h * dh, dh) = cache.attn[static_cast<size_t>(h)] * vh;
    }
    return (cache.ctx * wo.w).rowwise() + wo.b.col(0).transpose();
  }

  // Returns (grad wrt q_in, grad wrt kv_in).
  std::pair<Mat<S>, Mat<S>> backward(const Mat<S>& gy, AttentionCache<S>& cache) {
    wo.gw.noalias() += cache.ctx.transpose() * gy;
    wo.gb.col(0).noalias() += gy.colwise().sum().transpose();
    const Mat<S> gctx = gy * wo.w.transpose();
    const int dh = dim / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));
    Mat<S> gq = Mat<S>::Zero(cache.q.rows(), dim);
    Mat<S> gk = Mat<S>::Zero(cache.k.rows(), dim);
    Mat<S> gv = Mat<S>::Zero(cache.v.rows(), dim);
    for (int h = 0; h < heads; ++h) {
      const auto qh = cache.q.middleCols(h * dh, dh);
      const auto kh = cache.k.middleCols(h * dh, dh);
      const auto vh = cache.v.middleCols(h * dh, dh);
      const Mat<S>& attn = cache.attn[static_cast<size_t>(h)];
      const auto gctx_h = gctx.middleCols(h * dh, dh);
      const Mat<S> gattn = gctx_h * vh.transpose();
      gv.middleCols(h * dh, dh).noalias() += attn.transpose() * gctx_h;
      const Mat<S> gscores = softmax_rows_backward(attn, gattn) * scale;
      gq.middleCols(h * dh, dh).noalias() += gscores * kh;
      gk.middleCols(h * dh, dh).noalias() += gscores.transpose() * qh;
    }
    wq.gw.noalias() += cache.q_in.transpose() * gq;
    wq.gb.col(0).noalias() += gq.colwise().sum().transpose();
    wk.gw.noalias() += cache.kv_in.transpose() * gk;
    wk.gb.col(0).noalias() += gk.colwise().sum().transpose();
    wv.gw.noalias() += cache.kv_in.transpose() * gv;
    wv.gb.col(0).noalias() += gv.colwise().sum().transpose();
    Mat<S> gq_in = gq * wq.w.transpose();
    Mat<S> gkv_in = gk * wk.w.transpose() + gv * wv.w.transpose();
    return {std::move(gq_in), std::move(gkv_in)};
  }

  void collect(ParamList<S>& out, const std::string& prefix) {
    wq.collect(out, prefix + ".q");
    wk.collect(out, prefix + ".k");
    wv.collect(out, prefix + ".v");
    wo.collect(out, prefix + ".o");
  }
};

// ---------------------------------------------------------------------------
// Two-layer MLP with GELU, residual-friendly zero-initialized output
// ---------------------------------------------------------------------------

template <class S>
struct Mlp {
  Dense<S> fc1, fc2;
  Gelu<S> act;

  void init(int dim, int hidden, double stddev, Rng& rng, bool zero_output) {
    fc1.init(dim, hidden, stddev, rng);
    if (zero_output)
      fc2.init_zero(hidden, dim);
    else
      fc2.init(hidden, dim, stddev, rng);
  }

  Mat<S> forward(const Mat<S>& x) { return fc2.forward(act.forward(fc1.forward(x))); }

  Mat<S> backward(const Mat<S>& gy) { return fc1.backward(act.backward(fc2.backward(gy))); }

  void collect(ParamList<S>& out, const std::string& prefix) {
    fc1.collect(out, prefix + ".fc1");
    fc2.collect(out, prefix + ".fc2");
  }
};

// ---------------------------------------------------------------------------
// Channel attention (squeeze-excite over token channels)
// ---------------------------------------------------------------------------

template <class S>
struct ChannelAttention {
  Dense<S> fc1, fc2;
  LeakyRelu<S> act;
  Mat<S> x_cache, gate_cache, z_cache;

  void init(int dim, int reduction, double stddev, Rng& rng) {
    fc1.init(dim, std::max(1, dim / reduction), stddev, rng);
    fc2.init(std::max(1, dim / reduction), dim, stddev, rng);
  }

  Mat<S> forward(const Mat<S>& x) {
    x_cache = x;
    z_cache = x.colwise().mean();                      // 1 x E squeeze
    const Mat<S> hidden = act.forward(fc1.forward(z_cache));
    const Mat<S> raw = fc2.forward(hidden);
    gate_cache = raw.unaryExpr([](S v) { return sigmoid(v); });
    return x.array().rowwise() * gate_cache.row(0).array();
  }

  Mat<S> backward(const Mat<S>& gy) {
    Mat<S> gx = gy.array().rowwise() * gate_cache.row(0).array();
    const Mat<S> ggate = (gy.cwiseProduct(x_cache)).colwise().sum();
    const Mat<S> graw = ggate.cwiseProduct(gate_cache.cwiseProduct(Mat<S>::Ones(1, gate_cache.cols()) - gate_cache));
    const Mat<S> gz = fc1.backward(act.backward(fc2.backward(graw)));
    gx.array().rowwise() += gz.row(0).array() / static_cast<S>(x_cache.rows());
    return gx;
  }

  void collect(ParamList<S>& out, const std::string& prefix) {
    fc1.collect(out, prefix + ".fc1");
    fc2.collect(out, prefix + ".fc2");
  }
};

}  // namespace dslfiqa::nn
