#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dslfiqa/dsl/encoder.hpp"
#include "dslfiqa/iqa/model.hpp"
#include "dslfiqa/nn/adam.hpp"
#include "dslfiqa/nn/layers.hpp"
#include "test_util.hpp"

using namespace dslfiqa;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nn::Mat;
using testutil::rel_err;

namespace {

// Central-difference check of every registered parameter against the
// gradients accumulated by one analytic backward pass.
void compare_param_grads(const nn::ParamList<double>& params, const std::function<double()>& loss, double tol,
                         double h = 1e-5) {
  for (const auto& p : params) {
    for (Eigen::Index j = 0; j < p.value->cols(); ++j) {
      for (Eigen::Index i = 0; i < p.value->rows(); ++i) {
        const double keep = (*p.value)(i, j);
        (*p.value)(i, j) = keep + h;
        const double up = loss();
        (*p.value)(i, j) = keep - h;
        const double down = loss();
        (*p.value)(i, j) = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic = (*p.grad)(i, j);
        INFO("param ", p.name, " entry (", i, ",", j, ") analytic=", analytic, " numeric=", numeric);
        CHECK(rel_err(analytic, numeric) < tol);
      }
    }
  }
}

MatrixXd random_like(int r, int c, uint64_t seed) {
  Rng rng(seed);
  return testutil::random_matrix(r, c, rng);
}

}  // namespace

TEST_CASE("dense layer gradients") {
  Rng rng(1);
  nn::Dense<double> dense;
  dense.init(4, 3, 0.5, rng);
  MatrixXd x = random_like(5, 4, 2);
  const MatrixXd target = random_like(5, 3, 3);

  const auto loss_value = [&] { return 0.5 * (dense.forward(x) - target).squaredNorm(); };
  nn::ParamList<double> params;
  dense.collect(params, "dense");
  nn::zero_grads(params);
  const MatrixXd y = dense.forward(x);
  const MatrixXd gx = dense.backward(y - target);
  compare_param_grads(params, loss_value, 1e-6);

  const MatrixXd num_gx = testutil::numeric_grad(x, loss_value);
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(rel_err(gx(i), num_gx(i)) < 1e-6);
}

TEST_CASE("layernorm gradients") {
  nn::LayerNorm<double> ln;
  ln.init(6);
  ln.gamma = random_like(1, 6, 4).cwiseAbs() + MatrixXd::Constant(1, 6, 0.5);
  ln.beta = random_like(1, 6, 5);
  MatrixXd x = random_like(4, 6, 6);
  const MatrixXd target = random_like(4, 6, 7);

  const auto loss_value = [&] { return 0.5 * (ln.forward(x) - target).squaredNorm(); };
  nn::ParamList<double> params;
  ln.collect(params, "ln");
  nn::zero_grads(params);
  const MatrixXd gx = ln.backward(ln.forward(x) - target);
  compare_param_grads(params, loss_value, 1e-5);
  const MatrixXd num_gx = testutil::numeric_grad(x, loss_value);
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(rel_err(gx(i), num_gx(i)) < 1e-5);
}

TEST_CASE("batchnorm gradients in training mode") {
  nn::BatchNorm<double> bn;
  bn.init(3);
  bn.gamma = random_like(1, 3, 8).cwiseAbs() + MatrixXd::Constant(1, 3, 0.5);
  bn.beta = random_like(1, 3, 9);
  MatrixXd x = random_like(7, 3, 10);
  const MatrixXd target = random_like(7, 3, 11);

  const auto loss_value = [&] { return 0.5 * (bn.forward(x, true) - target).squaredNorm(); };
  nn::ParamList<double> params;
  bn.collect(params, "bn");
  nn::zero_grads(params);
  const MatrixXd gx = bn.backward(bn.forward(x, true) - target);
  compare_param_grads(params, loss_value, 1e-5);
  const MatrixXd num_gx = testutil::numeric_grad(x, loss_value);
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(rel_err(gx(i), num_gx(i)) < 1e-5);

  SUBCASE("eval mode uses running statistics") {
    const MatrixXd y1 = bn.forward(x, false);
    const MatrixXd y2 = bn.forward((x.array() + 0.0).matrix(), false);
    CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("conv2d gradients") {
  Rng rng(12);
  nn::Conv2d<double> conv;
  conv.init(2, 3, 3, 2, rng);
  nn::TensorMap<double> x;
  x.resize(2, 5, 5, 2);
  x.data = random_like(static_cast<int>(x.data.rows()), 2, 13);
  MatrixXd target;

  const auto loss_value = [&] {
    auto y = conv.forward(x);
    return 0.5 * (y.data - target).squaredNorm();
  };
  auto y0 = conv.forward(x);
  target = random_like(static_cast<int>(y0.data.rows()), 3, 14);
  nn::ParamList<double> params;
  conv.collect(params, "conv");
  nn::zero_grads(params);
  auto y = conv.forward(x);
  nn::TensorMap<double> gy = y;
  gy.data = y.data - target;
  const auto gx = conv.backward(gy);
  compare_param_grads(params, loss_value, 1e-6);

  const MatrixXd num_gx = testutil::numeric_grad(x.data, loss_value);
  for (Eigen::Index i = 0; i < x.data.size(); ++i) CHECK(rel_err(gx.data(i), num_gx(i)) < 1e-6);
}

TEST_CASE("multi-head attention gradients") {
  Rng rng(15);
  nn::MultiHeadAttention<double> attn;
  attn.init(6, 2, 0.3, rng, /*zero_output=*/false);
  MatrixXd q = random_like(4, 6, 16);
  MatrixXd kv = random_like(3, 6, 17);
  const MatrixXd target = random_like(4, 6, 18);
  nn::AttentionCache<double> cache;
  const MatrixXd empty_mask;

  const auto loss_value = [&] {
    nn::AttentionCache<double> c;
    return 0.5 * (attn.forward(q, kv, empty_mask, c) - target).squaredNorm();
  };
  nn::ParamList<double> params;
  attn.collect(params, "attn");
  nn::zero_grads(params);
  const MatrixXd y = attn.forward(q, kv, empty_mask, cache);
  auto [gq, gkv] = attn.backward(y - target, cache);
  compare_param_grads(params, loss_value, 1e-5);
  const MatrixXd num_gq = testutil::numeric_grad(q, loss_value);
  for (Eigen::Index i = 0; i < q.size(); ++i) CHECK(rel_err(gq(i), num_gq(i)) < 1e-5);
  const MatrixXd num_gkv = testutil::numeric_grad(kv, loss_value);
  for (Eigen::Index i = 0; i < kv.size(); ++i) CHECK(rel_err(gkv(i), num_gkv(i)) < 1e-5);

  SUBCASE("attention rows are a distribution") {
    for (const auto& a : cache.attn)
      for (Eigen::Index i = 0; i < a.rows(); ++i) CHECK(a.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("channel attention") {
  Rng rng(19);
  nn::ChannelAttention<double> ca;
  ca.init(6, 2, 0.3, rng);
  MatrixXd x = random_like(5, 6, 20);

  SUBCASE("zero input stays zero") {
    const MatrixXd y = ca.forward(MatrixXd::Zero(4, 6));
    CHECK(y.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("saturated gates give the identity map") {
    ca.fc2.b.setConstant(50.0);  // sigmoid(50) == 1 to machine precision
    const MatrixXd y = ca.forward(x);
    CHECK((y - x).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("gradients") {
    const MatrixXd target = random_like(5, 6, 21);
    const auto loss_value = [&] { return 0.5 * (ca.forward(x) - target).squaredNorm(); };
    nn::ParamList<double> params;
    ca.collect(params, "ca");
    nn::zero_grads(params);
    const MatrixXd gx = ca.backward(ca.forward(x) - target);
    compare_param_grads(params, loss_value, 1e-5);
    const MatrixXd num_gx = testutil::numeric_grad(x, loss_value);
    for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(rel_err(gx(i), num_gx(i)) < 1e-5);
  }
}

TEST_CASE("swin block") {
  Rng rng(22);
  SUBCASE("zero-initialized residual branches give the identity map") {
    iqa::SwinBlock<double> blk;
    Rng blk_rng = rng.split("blk");
    blk.init(4, 2, 0, 6, 2, 12, blk_rng);
    const MatrixXd x = random_like(16, 6, 23);
    CHECK((blk.forward(x) - x).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("single window equals full attention reference") {
    iqa::SwinBlock<double> blk;
    Rng blk_rng = rng.split("full");
    blk.init(4, 4, 0, 8, 2, 16, blk_rng);
    // give the residual branches real weights
    Rng wrng(77);
    nn::init_trunc_normal(blk.attn.wo.w, 0.3, wrng);
    nn::init_trunc_normal(blk.mlp.fc2.w, 0.3, wrng);
    const MatrixXd x = random_like(16, 8, 24);
    const MatrixXd got = blk.forward(x);

    // independent reference: plain pre-norm full attention + MLP
    MatrixXd h = blk.ln1.forward(x);
    const int dh = 4;
    MatrixXd q = (h * blk.attn.wq.w).rowwise() + blk.attn.wq.b.col(0).transpose();
    MatrixXd k = (h * blk.attn.wk.w).rowwise() + blk.attn.wk.b.col(0).transpose();
    MatrixXd v = (h * blk.attn.wv.w).rowwise() + blk.attn.wv.b.col(0).transpose();
    MatrixXd ctx(16, 8);
    for (int head = 0; head < 2; ++head) {
      MatrixXd scores = q.middleCols(head * dh, dh) * k.middleCols(head * dh, dh).transpose() / std::sqrt(4.0);
      MatrixXd a(16, 16);
      for (int i = 0; i < 16; ++i) {
        Eigen::ArrayXd e = (scores.row(i).array() - scores.row(i).maxCoeff()).exp();
        a.row(i) = (e / e.sum()).matrix().transpose();
      }
      ctx.middleCols(head * dh, dh) = a * v.middleCols(head * dh, dh);
    }
    MatrixXd x1 = x + ((ctx * blk.attn.wo.w).rowwise() + blk.attn.wo.b.col(0).transpose());
    MatrixXd h2 = blk.ln2.forward(x1);
    MatrixXd want = x1 + blk.mlp.forward(h2);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("gradients with and without shift") {
    for (const int shift : {0, 1}) {
      iqa::SwinBlock<double> blk;
      Rng blk_rng = rng.split("grad").split(static_cast<uint64_t>(shift));
      blk.init(4, 2, shift, 4, 2, 8, blk_rng);
      Rng wrng(31);
      nn::init_trunc_normal(blk.attn.wo.w, 0.3, wrng);
      nn::init_trunc_normal(blk.mlp.fc2.w, 0.3, wrng);
      MatrixXd x = random_like(16, 4, 32);
      const MatrixXd target = random_like(16, 4, 33);
      const auto loss_value = [&] { return 0.5 * (blk.forward(x) - target).squaredNorm(); };
      nn::ParamList<double> params;
      blk.collect(params, "swin");
      nn::zero_grads(params);
      const MatrixXd gx = blk.backward(blk.forward(x) - target);
      compare_param_grads(params, loss_value, 1e-5);
      const MatrixXd num_gx = testutil::numeric_grad(x, loss_value);
      for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(rel_err(gx(i), num_gx(i)) < 1e-5);
    }
  }
}

TEST_CASE("decoder block with singleton context") {
  Rng rng(25);
  iqa::DecoderBlock<double> dec;
  Rng dec_rng = rng.split("dec");
  dec.init(6, 2, 12, dec_rng);
  Rng wrng(41);
  nn::init_trunc_normal(dec.attn.wo.w, 0.3, wrng);
  nn::init_trunc_normal(dec.mlp.fc2.w, 0.3, wrng);
  MatrixXd x = random_like(4, 6, 42);
  MatrixXd ctx = random_like(1, 6, 43);

  SUBCASE("singleton softmax weights are exactly one") {
    nn::AttentionCache<double> probe;
    const MatrixXd empty_mask;
    dec.attn.forward(x, ctx, empty_mask, probe);
    for (const auto& a : probe.attn)
      for (Eigen::Index i = 0; i < a.rows(); ++i) CHECK(a(i, 0) == 1.0);
  }
  SUBCASE("zero value projection gives the identity map") {
    iqa::DecoderBlock<double> frozen;
    Rng frng = rng.split("frozen");
    frozen.init(6, 2, 12, frng);
    frozen.attn.wv.w.setZero();
    frozen.attn.wv.b.setZero();
    CHECK((frozen.forward(x, ctx) - x).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("gradients flow to tokens and context") {
    const MatrixXd target = random_like(4, 6, 44);
    const auto loss_value = [&] { return 0.5 * (dec.forward(x, ctx) - target).squaredNorm(); };
    nn::ParamList<double> params;
    dec.collect(params, "dec");
    nn::zero_grads(params);
    const MatrixXd gx = dec.backward(dec.forward(x, ctx) - target);
    compare_param_grads(params, loss_value, 1e-5);
    const MatrixXd num_gx = testutil::numeric_grad(x, loss_value);
    for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(rel_err(gx(i), num_gx(i)) < 1e-5);
    const MatrixXd num_gctx = testutil::numeric_grad(ctx, loss_value);
    for (Eigen::Index i = 0; i < ctx.size(); ++i) CHECK(rel_err(dec.ctx_grad(i), num_gctx(i)) < 1e-5);
  }
}

TEST_CASE("encoder network gradients on a tiny config") {
  dsl::EncoderConfig cfg;
  cfg.input_size = 8;
  cfg.channels = {4, 6};
  cfg.strides = {1, 2};
  cfg.repr_dim = 5;
  cfg.mlp_hidden = 6;
  dsl::EncoderNet<double> net;
  net.init(cfg, Rng(51));

  nn::TensorMap<double> batch;
  batch.resize(3, 8, 8, 3);
  batch.data = random_like(static_cast<int>(batch.data.rows()), 3, 52).cwiseAbs();
  const MatrixXd target = random_like(3, 5, 53);

  const auto loss_value = [&] { return 0.5 * (net.forward(batch, true) - target).squaredNorm(); };
  auto params = net.params();
  nn::zero_grads(params);
  const MatrixXd reps = net.forward(batch, true);
  net.backward(reps - target);
  compare_param_grads(params, loss_value, 1e-4);
}

TEST_CASE("adam") {
  SUBCASE("zero learning rate leaves parameters unchanged") {
    Mat<double> w = random_like(3, 3, 61);
    Mat<double> g = random_like(3, 3, 62);
    const Mat<double> w0 = w;
    nn::ParamList<double> params{{"w", &w, &g}};
    nn::Adam<double> opt(0.0);
    opt.step(params);
    CHECK((w - w0).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("descends a quadratic") {
    Mat<double> w = Mat<double>::Constant(2, 1, 5.0);
    Mat<double> g = Mat<double>::Zero(2, 1);
    nn::ParamList<double> params{{"w", &w, &g}};
    nn::Adam<double> opt(0.05);
    for (int i = 0; i < 500; ++i) {
      g = w;  // grad of 0.5|w|^2
      opt.step(params);
    }
    CHECK(w.norm() < 0.5);
  }
}
