#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace ktn {

// Round-trip-exact decimal formatting for 64-bit floats.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Numeric CSV without header. Every row must have the same column count;
// parse errors report path and 1-based line number.
Eigen::MatrixXd read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m, bool as_int = false);

// Edge list CSV with a `src_id,dst_id` header (tolerated when absent).
std::vector<std::pair<int, int>> read_edges_csv(const std::string& path);
void write_edges_csv(const std::string& path, const std::vector<std::pair<int, int>>& edges);

}  // namespace ktn
