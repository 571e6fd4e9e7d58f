#pragma once

#include <Eigen/Dense>

#include "schema.hpp"

namespace ktn {

struct MetricValue {
  double value = 0.0;
  int evaluated = 0;
  int skipped = 0;  // rows without any relevant class
};

// Mean NDCG over rows: full ranking, gain = relevance, discount
// 1/log2(rank+1), ties broken by ascending class index.
MetricValue ndcg(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& relevance);

// Mean reciprocal rank of the highest-ranked relevant class per row.
MetricValue mrr(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& relevance);

// Argmax match rate for single-label rows; ties broken by ascending index.
double accuracy(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& onehot);

}  // namespace ktn
