#include "sparse.hpp"

#include <algorithm>

#include "schema.hpp"

namespace ktn {

CsrMatrix CsrMatrix::from_pairs(int rows, int cols, std::vector<std::pair<int, int>> pairs) {
  for (const auto& [r, c] : pairs) {
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw Error("edge (" + std::to_string(r) + ", " + std::to_string(c) +
                  ") out of bounds for " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  m.col_idx.reserve(pairs.size());
  for (const auto& [r, c] : pairs) {
    m.row_ptr[r + 1]++;
    m.col_idx.push_back(c);
  }
  for (int r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CsrMatrix CsrMatrix::transposed() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  t.col_idx.assign(col_idx.size(), 0);
  if (!vals.empty()) t.vals.assign(vals.size(), 0.0);

  for (int c : col_idx) t.row_ptr[c + 1]++;
  for (int r = 0; r < t.rows; ++r) t.row_ptr[r + 1] += t.row_ptr[r];

  std::vector<std::int64_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (int r = 0; r < rows; ++r) {
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      std::int64_t pos = cursor[col_idx[k]]++;
      t.col_idx[pos] = r;
      if (!vals.empty()) t.vals[pos] = vals[k];
    }
  }
  return t;
}

Eigen::MatrixXd CsrMatrix::multiply(const Eigen::MatrixXd& x) const {
  if (x.rows() != cols)
    throw Error("sparse multiply shape mismatch: " + std::to_string(rows) + "x" +
                std::to_string(cols) + " * " + std::to_string(x.rows()) + "x" +
                std::to_string(x.cols()));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, x.cols());
  for (int r = 0; r < rows; ++r) {
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      out.row(r) += value_at(k) * x.row(col_idx[k]);
    }
  }
  return out;
}

void CsrMatrix::add_transpose_multiply(const Eigen::MatrixXd& g, Eigen::MatrixXd& into) const {
  if (g.rows() != rows || into.rows() != cols || into.cols() != g.cols())
    throw Error("sparse transpose-multiply shape mismatch");
  for (int r = 0; r < rows; ++r) {
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      into.row(col_idx[k]) += value_at(k) * g.row(r);
    }
  }
}

Eigen::MatrixXd CsrMatrix::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) out(r, col_idx[k]) += value_at(k);
  return out;
}

std::vector<std::pair<int, int>> CsrMatrix::pairs() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(col_idx.size());
  for (int r = 0; r < rows; ++r)
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) out.emplace_back(r, col_idx[k]);
  return out;
}

}  // namespace ktn
