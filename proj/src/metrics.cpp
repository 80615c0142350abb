#include "dslfiqa/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dslfiqa::metrics {

namespace {

void check_pairs(const ScorePairs& pairs) {
  if (pairs.actual.size() != pairs.predicted.size())
    fail(ErrorCode::LengthMismatch, "actual and predicted lists differ in length");
  if (pairs.actual.size() < 2) fail(ErrorCode::TooFewSamples, "correlation needs at least two pairs");
  for (size_t i = 0; i < pairs.actual.size(); ++i)
    if (!std::isfinite(pairs.actual[i]) || !std::isfinite(pairs.predicted[i]))
      fail(ErrorCode::NonFiniteLoss, "correlation input contains a non-finite value");
}

double pearson(const std::vector<double>& a, const std::vector<double>& b, bool throw_on_zero_variance) {
  const size_t n = a.size();
  const double mu_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mu_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - mu_a, db = b[i] - mu_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) {
    if (throw_on_zero_variance) fail(ErrorCode::ZeroVariance, "correlation undefined for a constant series");
    return 0.0;
  }
  return cov / (std::sqrt(var_a) * std::sqrt(var_b));
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = avg_rank;
    i = j + 1;
  }
  return ranks;
}

double plcc(const ScorePairs& pairs) {
  check_pairs(pairs);
  return pearson(pairs.actual, pairs.predicted, /*throw_on_zero_variance=*/true);
}

double srcc(const ScorePairs& pairs) {
  check_pairs(pairs);
  const auto ra = average_ranks(pairs.actual);
  const auto rb = average_ranks(pairs.predicted);
  return pearson(ra, rb, /*throw_on_zero_variance=*/false);
}

double average_precision(const std::string& query_label, const std::vector<std::string>& retrieved_labels, int k) {
  if (k < 1) fail(ErrorCode::ParamOutOfRange, "average_precision requires k >= 1");
  const int depth = std::min<int>(k, static_cast<int>(retrieved_labels.size()));
  if (depth == 0) return 0.0;
  int hits = 0;
  double sum_precision = 0.0;
  for (int r = 0; r < depth; ++r) {
    if (retrieved_labels[static_cast<size_t>(r)] == query_label) {
      ++hits;
      sum_precision += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum_precision / static_cast<double>(depth);
}

RetrievalResult retrieval_experiment(const Eigen::MatrixXf& query_reps, const std::vector<std::string>& query_labels,
                                     const Eigen::MatrixXf& gallery_reps,
                                     const std::vector<std::string>& gallery_labels, int k) {
  if (gallery_reps.rows() == 0) fail(ErrorCode::EmptyGallery, "retrieval gallery is empty");
  if (query_reps.rows() != static_cast<Eigen::Index>(query_labels.size()) ||
      gallery_reps.rows() != static_cast<Eigen::Index>(gallery_labels.size()))
    fail(ErrorCode::LengthMismatch, "representation and label counts disagree");
  if (query_reps.cols() != gallery_reps.cols())
    fail(ErrorCode::DimensionMismatch, "query and gallery representation dimensions disagree");

  RetrievalResult result;
  result.k = k;
  const Eigen::Index n_gallery = gallery_reps.rows();
  std::vector<Eigen::Index> order(static_cast<size_t>(n_gallery));
  for (Eigen::Index q = 0; q < query_reps.rows(); ++q) {
    Eigen::VectorXf d2(n_gallery);
    for (Eigen::Index g = 0; g < n_gallery; ++g) d2(g) = (gallery_reps.row(g) - query_reps.row(q)).squaredNorm();
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return d2(a) < d2(b); });

    RetrievalQueryResult qr;
    qr.query_label = query_labels[static_cast<size_t>(q)];
    const int depth = std::min<int>(k, static_cast<int>(n_gallery));
    for (int r = 0; r < depth; ++r) qr.retrieved_labels.push_back(gallery_labels[static_cast<size_t>(order[static_cast<size_t>(r)])]);
    qr.ap = average_precision(qr.query_label, qr.retrieved_labels, k);
    result.per_query.push_back(std::move(qr));
  }
  double sum = 0.0;
  for (const auto& qr : result.per_query) sum += qr.ap;
  result.map = result.per_query.empty() ? 0.0 : sum / static_cast<double>(result.per_query.size());
  return result;
}

}  // namespace dslfiqa::metrics
