#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace ktn {

// Compressed-row matrix. An empty `vals` means every stored entry is 1
// (pattern matrix). Aggregation is row-gather dominated, so everything that
// multiplies by features keeps the operator on the left.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> row_ptr;  // size rows + 1
  std::vector<int> col_idx;
  std::vector<double> vals;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx.size()); }
  double value_at(std::int64_t k) const { return vals.empty() ? 1.0 : vals[k]; }

  // Builds from (row, col) pairs; duplicates are collapsed to one entry.
  static CsrMatrix from_pairs(int rows, int cols, std::vector<std::pair<int, int>> pairs);

  CsrMatrix transposed() const;

  // this * x
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& x) const;
  // into += this^T * g
  void add_transpose_multiply(const Eigen::MatrixXd& g, Eigen::MatrixXd& into) const;

  Eigen::MatrixXd dense() const;
  std::vector<std::pair<int, int>> pairs() const;
};

}  // namespace ktn
