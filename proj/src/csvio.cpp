#include "csvio.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "schema.hpp"

namespace ktn {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& path, int line_no) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0'))
    throw Error(path + ":" + std::to_string(line_no) + ": not a number: '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& path, int line_no) {
  const char* begin = s.c_str();
  char* end = nullptr;
  long v = std::strtol(begin, &end, 10);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0'))
    throw Error(path + ":" + std::to_string(line_no) + ": not an integer: '" + s + "'");
  return v;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    if (rows.empty()) {
      cols = fields.size();
    } else if (fields.size() != cols) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                  " columns, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, path, line_no));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  return m;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m, bool as_int) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      if (as_int)
        out << static_cast<long long>(m(i, j));
      else
        out << format_double(m(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<std::pair<int, int>> read_edges_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line_no == 1 && line.find_first_not_of("0123456789,- \r") != std::string::npos)
      continue;  // header
    auto fields = split_fields(line);
    if (fields.size() != 2)
      throw Error(path + ":" + std::to_string(line_no) + ": expected 2 columns, got " +
                  std::to_string(fields.size()));
    edges.emplace_back(static_cast<int>(parse_long(fields[0], path, line_no)),
                       static_cast<int>(parse_long(fields[1], path, line_no)));
  }
  return edges;
}

void write_edges_csv(const std::string& path, const std::vector<std::pair<int, int>>& edges) {
  std::ostringstream out;
  out << "src_id,dst_id\n";
  for (const auto& [s, d] : edges) out << s << ',' << d << '\n';
  write_text_file(path, out.str());
}

}  // namespace ktn
