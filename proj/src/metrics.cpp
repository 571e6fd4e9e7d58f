#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "schema.hpp"

namespace ktn {

namespace {

void check_shapes(const char* op, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(std::string(op) + ": scores " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " vs labels " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()));
}

// Class indices ordered by descending score; equal scores keep ascending
// index order.
std::vector<int> ranking(const Eigen::MatrixXd& scores, Eigen::Index row) {
  std::vector<int> order(scores.cols());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores(row, a) > scores(row, b); });
  return order;
}

}  // namespace

MetricValue ndcg(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& relevance) {
  check_shapes("ndcg", scores, relevance);
  MetricValue out;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int relevant = 0;
    for (Eigen::Index c = 0; c < relevance.cols(); ++c)
      if (relevance(i, c) > 0.0) ++relevant;
    if (relevant == 0) {
      out.skipped++;
      continue;
    }
    std::vector<int> order = ranking(scores, i);
    double dcg = 0.0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank)
      dcg += relevance(i, order[rank - 1]) / std::log2(static_cast<double>(rank) + 1.0);
    double idcg = 0.0;
    for (int rank = 1; rank <= relevant; ++rank)
      idcg += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
    sum += dcg / idcg;
    out.evaluated++;
  }
  out.value = out.evaluated > 0 ? sum / out.evaluated : 0.0;
  return out;
}

MetricValue mrr(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& relevance) {
  check_shapes("mrr", scores, relevance);
  MetricValue out;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    std::vector<int> order = ranking(scores, i);
    double rr = 0.0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank) {
      if (relevance(i, order[rank - 1]) > 0.0) {
        rr = 1.0 / static_cast<double>(rank);
        break;
      }
    }
    if (rr == 0.0) {
      out.skipped++;
      continue;
    }
    sum += rr;
    out.evaluated++;
  }
  out.value = out.evaluated > 0 ? sum / out.evaluated : 0.0;
  return out;
}

double accuracy(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& onehot) {
  check_shapes("accuracy", scores, onehot);
  if (scores.rows() == 0) return 0.0;
  int hits = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = static_cast<int>(c);
    if (onehot(i, best) > 0.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

}  // namespace ktn
