#pragma once

#include "dslfiqa/nn/common.hpp"

namespace dslfiqa::nn {

template <class S>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const ParamList<S>& params) {
    if (m_.empty()) {
      m_.reserve(params.size());
      v_.reserve(params.size());
      for (const auto& p : params) {
        m_.push_back(Mat<S>::Zero(p.value->rows(), p.value->cols()));
        v_.push_back(Mat<S>::Zero(p.value->rows(), p.value->cols()));
      }
    }
    if (m_.size() != params.size()) fail(ErrorCode::BadConfig, "optimizer bound to a different parameter list");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      const Mat<S>& g = *params[i].grad;
      m_[i] = static_cast<S>(beta1_) * m_[i] + static_cast<S>(1.0 - beta1_) * g;
      v_[i] = static_cast<S>(beta2_) * v_[i] + static_cast<S>(1.0 - beta2_) * g.cwiseProduct(g);
      const Mat<S> m_hat = m_[i] / static_cast<S>(bc1);
      const Mat<S> v_hat = v_[i] / static_cast<S>(bc2);
      params[i].value->array() -=
          static_cast<S>(lr_) * m_hat.array() / (v_hat.array().sqrt() + static_cast<S>(eps_));
    }
  }

  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<Mat<S>> m_, v_;
};

}  // namespace dslfiqa::nn
