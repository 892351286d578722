#include "faselect/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "faselect/errors.hpp"

namespace faselect::csv {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok) {
  const char* s = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s) throw io_error("csv: not a number: '" + tok + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

static std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw io_error("cannot open for writing: " + path);
  return f;
}

static std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open for reading: " + path);
  return f;
}

static void write_rows(std::ofstream& f, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) f << ',';
      f << fmt(m(i, j));
    }
    f << '\n';
  }
}

void write_matrix(const Matrix& m, const std::string& path,
                  const std::string& comment) {
  auto f = open_out(path);
  if (!comment.empty()) f << "# " << comment << '\n';
  write_rows(f, m);
  if (!f) throw io_error("write failed: " + path);
}

Matrix read_matrix(const std::string& path) {
  auto f = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto toks = split(line);
    std::vector<double> row;
    row.reserve(toks.size());
    for (const auto& t : toks) row.push_back(parse_double(t));
    if (!rows.empty() && row.size() != rows[0].size())
      throw io_error("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error("empty matrix file: " + path);
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_vector(const Vector& v, const std::string& path,
                  const std::string& comment) {
  auto f = open_out(path);
  if (!comment.empty()) f << "# " << comment << '\n';
  for (double x : v) f << fmt(x) << '\n';
  if (!f) throw io_error("write failed: " + path);
}

Vector read_vector(const std::string& path) {
  auto f = open_in(path);
  Vector v;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    v.push_back(parse_double(line));
  }
  if (v.empty()) throw io_error("empty vector file: " + path);
  return v;
}

void write_dataset(const Matrix& rows, const std::string& path,
                   const std::string& comment) {
  auto f = open_out(path);
  if (!comment.empty()) f << "# " << comment << '\n';
  for (std::size_t j = 0; j < rows.cols(); ++j) {
    if (j) f << ',';
    f << 'v' << (j + 1);
  }
  f << '\n';
  write_rows(f, rows);
  if (!f) throw io_error("write failed: " + path);
}

Matrix read_dataset(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  std::size_t p = 0;
  bool saw_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto toks = split(line);
    if (!saw_header) {
      for (std::size_t j = 0; j < toks.size(); ++j)
        if (toks[j] != "v" + std::to_string(j + 1))
          throw io_error("dataset header must be v1..vp, got '" + toks[j] +
                         "' in " + path);
      p = toks.size();
      saw_header = true;
      continue;
    }
    if (toks.size() != p) throw io_error("ragged dataset row in " + path);
    std::vector<double> row;
    row.reserve(p);
    for (const auto& t : toks) {
      const double v = parse_double(t);
      if (!std::isfinite(v)) throw io_error("non-finite value in " + path);
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!saw_header) throw io_error("missing dataset header in " + path);
  if (rows.size() < 2) throw io_error("dataset needs n >= 2 rows: " + path);
  Matrix m(rows.size(), p);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) = rows[i][j];
  return m;
}

}  // namespace faselect::csv
