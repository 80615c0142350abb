#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dslfiqa/core/error.hpp"
#include "dslfiqa/core/rng.hpp"

namespace dslfiqa::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Named handle onto one parameter tensor and its gradient accumulator.
template <class S>
struct ParamRef {
  std::string name;
  Mat<S>* value;
  Mat<S>* grad;
};

template <class S>
using ParamList = std::vector<ParamRef<S>>;

template <class S>
void zero_grads(const ParamList<S>& params) {
  for (const auto& p : params) p.grad->setZero();
}

template <class S>
int64_t param_count(const ParamList<S>& params) {
  int64_t n = 0;
  for (const auto& p : params) n += p.value->size();
  return n;
}

template <class S>
void init_trunc_normal(Mat<S>& m, double stddev, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<S>(rng.truncated_normal(stddev));
}

// ---------------------------------------------------------------------------
// Elementwise activations
// ---------------------------------------------------------------------------

template <class S>
struct LeakyRelu {
  S slope;
  Mat<S> mask;

  explicit LeakyRelu(S slope_ = static_cast<S>(0.01)) : slope(slope_) {}

  Mat<S> forward(const Mat<S>& x) {
    mask = (x.array() > S(0)).template cast<S>().matrix();
    return x.cwiseProduct(mask) + slope * x.cwiseProduct(Mat<S>::Ones(x.rows(), x.cols()) - mask);
  }

  Mat<S> backward(const Mat<S>& gy) const {
    return gy.cwiseProduct(mask) + slope * gy.cwiseProduct(Mat<S>::Ones(gy.rows(), gy.cols()) - mask);
  }
};

template <class S>
struct Gelu {
  Mat<S> x_cache;

  Mat<S> forward(const Mat<S>& x) {
    x_cache = x;
    return x.unaryExpr([](S v) {
      return static_cast<S>(0.5 * static_cast<double>(v) * (1.0 + std::erf(static_cast<double>(v) / std::sqrt(2.0))));
    });
  }

  Mat<S> backward(const Mat<S>& gy) const {
    Mat<S> gx = x_cache.unaryExpr([](S v) {
      const double xv = static_cast<double>(v);
      const double cdf = 0.5 * (1.0 + std::erf(xv / std::sqrt(2.0)));
      const double pdf = std::exp(-0.5 * xv * xv) / std::sqrt(2.0 * 3.14159265358979323846);
      return static_cast<S>(cdf + xv * pdf);
    });
    return gx.cwiseProduct(gy);
  }
};

template <class S>
S sigmoid(S x) {
  return x >= S(0) ? S(1) / (S(1) + std::exp(-x)) : S(std::exp(x) / (S(1) + std::exp(x)));
}

// Row-wise softmax with max subtraction.
template <class S>
Mat<S> softmax_rows(const Mat<S>& logits) {
  Mat<S> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const S m = logits.row(i).maxCoeff();
    Eigen::Array<S, 1, Eigen::Dynamic> e = (logits.row(i).array() - m).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

// Given s = softmax(z) row-wise and gy = dL/ds, returns dL/dz.
template <class S>
Mat<S> softmax_rows_backward(const Mat<S>& s, const Mat<S>& gy) {
  Mat<S> gz(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const S dot = s.row(i).dot(gy.row(i));
    gz.row(i) = s.row(i).cwiseProduct(gy.row(i) - Mat<S>::Constant(1, s.cols(), dot));
  }
  return gz;
}

template <class S>
S logsumexp(const Vec<S>& v) {
  const S m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace dslfiqa::nn
