#pragma once

#include <algorithm>
#include <vector>

#include "dslfiqa/nn/common.hpp"

namespace dslfiqa::dsl {

using nn::Mat;
using nn::Vec;

// Similarity between two degradation representations: negative squared L2
// distance, so identical vectors score the maximum of 0.
template <class S>
S similarity(const Vec<S>& a, const Vec<S>& b) {
  if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "similarity: representation dimensions disagree");
  return -(a - b).squaredNorm();
}

// Pairwise similarity matrix between row sets: out(i, j) = -|a_i - b_j|^2.
// Computed from explicit differences; the expanded 2ab - a^2 - b^2 form loses
// digits to cancellation for nearby rows.
template <class S>
Mat<S> similarity_matrix(const Mat<S>& a, const Mat<S>& b) {
  if (a.cols() != b.cols()) fail(ErrorCode::DimensionMismatch, "similarity: representation dimensions disagree");
  Mat<S> out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = -(a.row(i) - b.row(j)).squaredNorm();
  return out;
}

// Soft proximity mapping: convex combination of gallery rows with weights
// softmax(similarity(query, gallery_j) / theta).
template <class S>
Vec<S> soft_proximity_map(const Vec<S>& query, const Mat<S>& gallery, S theta) {
  if (gallery.rows() == 0) fail(ErrorCode::EmptyGallery, "soft_proximity_map: gallery is empty");
  if (gallery.cols() != query.size())
    fail(ErrorCode::DimensionMismatch, "soft_proximity_map: representation dimensions disagree");
  Mat<S> logits(1, gallery.rows());
  for (Eigen::Index j = 0; j < gallery.rows(); ++j)
    logits(0, j) = similarity<S>(query, gallery.row(j).transpose()) / theta;
  const Mat<S> w = nn::softmax_rows(logits);
  return (w * gallery).transpose();
}

template <class S>
struct DualSetLossGrads {
  S value = S(0);
  Mat<S> d_s;  // gradient w.r.t. every Set S representation
  Mat<S> d_r;  // gradient w.r.t. every Set R representation
};

// Contrastive loss over soft proximity mappings:
//   L = -(1/m) sum_i log[ exp(sim(s_i, p_i)/theta) / sum_{j != i} exp(sim(s_j, p_i)/theta) ]
// where p_i is the soft proximity map of s_i into the gallery. The positive
// term stays out of the denominator unless include_positive is set.
template <class S>
DualSetLossGrads<S> contrastive_loss_grad(const Mat<S>& s_reps, const Mat<S>& r_reps, S theta,
                                          bool include_positive = false) {
  const Eigen::Index m = s_reps.rows(), n = r_reps.rows();
  if (m < 2) fail(ErrorCode::TooFewSamples, "contrastive loss needs at least two Set S representations");
  if (n < 1) fail(ErrorCode::EmptyGallery, "contrastive loss needs a non-empty gallery");
  if (s_reps.cols() != r_reps.cols())
    fail(ErrorCode::DimensionMismatch, "contrastive loss: representation dimensions disagree");
  if (theta <= S(0)) fail(ErrorCode::ParamOutOfRange, "temperature must be positive");

  // forward
  const Mat<S> gallery_logits = similarity_matrix(s_reps, r_reps) / theta;       // m x n
  const Mat<S> weights = nn::softmax_rows(gallery_logits);                       // m x n
  const Mat<S> proximity = weights * r_reps;                                     // m x D
  const Mat<S> anchor_logits = similarity_matrix(proximity, s_reps) / theta;     // row i: sim(s_j, p_i)/theta

  S loss = S(0);
  Mat<S> d_anchor = Mat<S>::Zero(m, m);
  const S inv_m = S(1) / static_cast<S>(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Vec<S> denom_logits(include_positive ? m : m - 1);
    Eigen::Index t = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!include_positive && j == i) continue;
      denom_logits(t++) = anchor_logits(i, j);
    }
    const S lse = nn::logsumexp(denom_logits);
    loss += -(anchor_logits(i, i) - lse) * inv_m;

    d_anchor(i, i) += -inv_m;
    const S mx = denom_logits.maxCoeff();
    const S z = (denom_logits.array() - mx).exp().sum();
    t = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!include_positive && j == i) continue;
      d_anchor(i, j) += inv_m * std::exp(denom_logits(t++) - mx) / z;
    }
  }

  // backward through anchor logits: A(i,j) = -|s_j - p_i|^2 / theta
  Mat<S> d_s = Mat<S>::Zero(m, s_reps.cols());
  Mat<S> d_prox = Mat<S>::Zero(m, s_reps.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const S g = d_anchor(i, j);
      if (g == S(0)) continue;
      const Vec<S> diff = (s_reps.row(j) - proximity.row(i)).transpose();
      d_s.row(j) += (-(S(2) / theta) * g) * diff.transpose();
      d_prox.row(i) += ((S(2) / theta) * g) * diff.transpose();
    }
  }

  // through the proximity map: p = W R with W = softmax(G / theta)
  Mat<S> d_r = weights.transpose() * d_prox;
  const Mat<S> d_weights = d_prox * r_reps.transpose();
  const Mat<S> d_gallery_logits = nn::softmax_rows_backward(weights, d_weights) / theta;

  // through gallery similarities: G(i,j) = -|s_i - r_j|^2
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const S g = d_gallery_logits(i, j);
      if (g == S(0)) continue;
      const Vec<S> diff = (s_reps.row(i) - r_reps.row(j)).transpose();
      d_s.row(i) += (-S(2) * g) * diff.transpose();
      d_r.row(j) += (S(2) * g) * diff.transpose();
    }
  }

  DualSetLossGrads<S> out;
  out.value = loss;
  out.d_s = std::move(d_s);
  out.d_r = std::move(d_r);
  return out;
}

template <class S>
S contrastive_loss(const Mat<S>& s_reps, const Mat<S>& r_reps, S theta, bool include_positive = false) {
  return contrastive_loss_grad(s_reps, r_reps, theta, include_positive).value;
}

// Bidirectional degradation extraction loss: L_Con(S, R) + L_Con(R, S).
template <class S>
DualSetLossGrads<S> degradation_extraction_loss_grad(const Mat<S>& s_reps, const Mat<S>& r_reps, S theta,
                                                     bool include_positive = false) {
  if (r_reps.rows() < 2)
    fail(ErrorCode::TooFewSamples, "bidirectional loss needs at least two Set R representations");
  const auto fwd = contrastive_loss_grad(s_reps, r_reps, theta, include_positive);
  const auto rev = contrastive_loss_grad(r_reps, s_reps, theta, include_positive);
  DualSetLossGrads<S> out;
  out.value = fwd.value + rev.value;
  out.d_s = fwd.d_s + rev.d_r;
  out.d_r = fwd.d_r + rev.d_s;
  return out;
}

template <class S>
S degradation_extraction_loss(const Mat<S>& s_reps, const Mat<S>& r_reps, S theta, bool include_positive = false) {
  return degradation_extraction_loss_grad(s_reps, r_reps, theta, include_positive).value;
}

template <class S>
struct PatchLossGrads {
  S value = S(0);
  Vec<S> d_query;
  Vec<S> d_positive;
  Mat<S> d_negatives;
};

// Patch-based InfoNCE with raw dot-product similarity:
//   L = -log[ exp(x . x+ / theta) / sum_n exp(x . x-_n / theta) ]
// The printed form keeps the positive out of the denominator and is unbounded
// below; include_positive switches to the standard bounded denominator used
// for training runs.
template <class S>
PatchLossGrads<S> patch_based_loss_grad(const Vec<S>& query, const Vec<S>& positive, const Mat<S>& negatives,
                                        S theta, bool include_positive = false) {
  if (negatives.rows() == 0) fail(ErrorCode::EmptyNegatives, "patch loss needs at least one negative");
  if (positive.size() != query.size() || negatives.cols() != query.size())
    fail(ErrorCode::DimensionMismatch, "patch loss: representation dimensions disagree");
  if (theta <= S(0)) fail(ErrorCode::ParamOutOfRange, "temperature must be positive");

  const S pos_logit = query.dot(positive) / theta;
  const Eigen::Index n = negatives.rows();
  Vec<S> den_logits(include_positive ? n + 1 : n);
  den_logits.head(n) = (negatives * query) / theta;
  if (include_positive) den_logits(n) = pos_logit;
  const S lse = nn::logsumexp(den_logits);

  PatchLossGrads<S> out;
  out.value = -(pos_logit - lse);
  const S mx = den_logits.maxCoeff();
  Vec<S> p = (den_logits.array() - mx).exp();
  p /= p.sum();

  out.d_query = -positive / theta;
  out.d_positive = -query / theta;
  out.d_negatives = Mat<S>::Zero(negatives.rows(), negatives.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    out.d_query += (p(k) / theta) * negatives.row(k).transpose();
    out.d_negatives.row(k) = (p(k) / theta) * query.transpose();
  }
  if (include_positive) {
    out.d_query += (p(n) / theta) * positive;
    out.d_positive += (p(n) / theta) * query;
  }
  return out;
}

template <class S>
S patch_based_loss(const Vec<S>& query, const Vec<S>& positive, const Mat<S>& negatives, S theta,
                   bool include_positive = false) {
  return patch_based_loss_grad(query, positive, negatives, theta, include_positive).value;
}

template <class S>
struct NaiveLossGrads {
  S value = S(0);
  Mat<S> d_reps;
};

// InfoNCE over a labeled synthetic batch: anchors pair with every same-family
// representation, the denominator runs over all other batch members, and
// similarity is the conventional dot product.
template <class S>
NaiveLossGrads<S> naive_loss_grad(const Mat<S>& reps, const std::vector<int>& families, S theta) {
  const Eigen::Index b = reps.rows();
  if (b != static_cast<Eigen::Index>(families.size()))
    fail(ErrorCode::LengthMismatch, "naive loss: representation and family counts disagree");
  if (theta <= S(0)) fail(ErrorCode::ParamOutOfRange, "temperature must be positive");
  std::vector<int> distinct;
  for (const int f : families)
    if (std::find(distinct.begin(), distinct.end(), f) == distinct.end()) distinct.push_back(f);
  if (distinct.size() < 2) fail(ErrorCode::DegenerateBatch, "naive loss needs at least two families");

  const Mat<S> logits = (reps * reps.transpose()) / theta;
  std::vector<Eigen::Index> anchors;
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      if (j != i && families[static_cast<size_t>(j)] == families[static_cast<size_t>(i)]) {
        anchors.push_back(i);
        break;
      }
    }
  }
  if (anchors.empty()) fail(ErrorCode::DegenerateBatch, "naive loss needs a family with two members");

  NaiveLossGrads<S> out;
  out.d_reps = Mat<S>::Zero(b, reps.cols());
  Mat<S> d_logits = Mat<S>::Zero(b, b);
  const S inv_anchors = S(1) / static_cast<S>(anchors.size());

  for (const Eigen::Index i : anchors) {
    std::vector<Eigen::Index> positives, others;
    for (Eigen::Index j = 0; j < b; ++j) {
      if (j == i) continue;
      others.push_back(j);
      if (families[static_cast<size_t>(j)] == families[static_cast<size_t>(i)]) positives.push_back(j);
    }
    Vec<S> denom(static_cast<Eigen::Index>(others.size()));
    for (size_t t = 0; t < others.size(); ++t) denom(static_cast<Eigen::Index>(t)) = logits(i, others[t]);
    const S lse = nn::logsumexp(denom);
    const S mx = denom.maxCoeff();
    Vec<S> p = (denom.array() - mx).exp();
    p /= p.sum();

    const S w_pair = inv_anchors / static_cast<S>(positives.size());
    for (const Eigen::Index pos : positives) {
      out.value += -(logits(i, pos) - lse) * w_pair;
      d_logits(i, pos) += -w_pair;
      for (size_t t = 0; t < others.size(); ++t) d_logits(i, others[t]) += w_pair * p(static_cast<Eigen::Index>(t));
    }
  }

  // logits(i, j) = x_i . x_j / theta
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      const S g = d_logits(i, j);
      if (g == S(0)) continue;
      out.d_reps.row(i) += (g / theta) * reps.row(j);
      out.d_reps.row(j) += (g / theta) * reps.row(i);
    }
  }
  return out;
}

template <class S>
S naive_loss(const Mat<S>& reps, const std::vector<int>& families, S theta) {
  return naive_loss_grad(reps, families, theta).value;
}

}  // namespace dslfiqa::dsl
