#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dslfiqa/core/error.hpp"

namespace dslfiqa::metrics {

struct ScorePairs {
  std::vector<double> actual;
  std::vector<double> predicted;
};

// Pearson linear correlation; throws ZeroVariance when either series is
// constant.
double plcc(const ScorePairs& pairs);

// Spearman rank correlation with average ranks for ties; reduces to the
// 1 - 6*sum(d^2)/(N(N^2-1)) form when all values are distinct.
double srcc(const ScorePairs& pairs);

std::vector<double> average_ranks(const std::vector<double>& values);

// Ranked average precision truncated at k: mean of precision@rank over the
// hit ranks, normalized by min(k, number of retrieved entries).
double average_precision(const std::string& query_label, const std::vector<std::string>& retrieved_labels, int k);

struct RetrievalQueryResult {
  std::string query_label;
  std::vector<std::string> retrieved_labels;
  double ap = 0.0;
};

struct RetrievalResult {
  std::vector<RetrievalQueryResult> per_query;
  double map = 0.0;
  int k = 5;
};

// Ranks gallery rows by squared L2 distance to each query row (ascending,
// ties broken by gallery index) and scores label agreement at depth k.
RetrievalResult retrieval_experiment(const Eigen::MatrixXf& query_reps, const std::vector<std::string>& query_labels,
                                     const Eigen::MatrixXf& gallery_reps,
                                     const std::vector<std::string>& gallery_labels, int k = 5);

}  // namespace dslfiqa::metrics
