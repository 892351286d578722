#include "faselect/draws_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "faselect/csv.hpp"
#include "faselect/errors.hpp"

namespace faselect {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw io_error("draws: truncated header in " + path);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ofstream& f, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  f.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::ifstream& f, const std::string& path) {
  unsigned char b[8];
  if (!f.read(reinterpret_cast<char*>(b), 8))
    throw io_error("draws: truncated payload in " + path);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

PosteriorDraws read_draws_binary(std::ifstream& f, const std::string& path) {
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw io_error("draws: bad magic in " + path);
  const std::uint32_t version = get_u32(f, path);
  if (version != kVersion)
    throw io_error("draws: unsupported version " + std::to_string(version) +
                   " in " + path);
  PosteriorDraws d;
  d.p = get_u32(f, path);
  d.k = get_u32(f, path);
  d.M = get_u32(f, path);
  if (d.p < 1 || d.k < 1 || d.M < 1)
    throw io_error("draws: degenerate dimensions in " + path);
  d.loadings.reserve(d.M);
  d.uniqueness.reserve(d.M);
  for (std::size_t m = 0; m < d.M; ++m) {
    Matrix b(d.p, d.k);
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = get_f64(f, path);
    Vector s(d.p);
    for (std::size_t j = 0; j < d.p; ++j) {
      s[j] = get_f64(f, path);
      if (!(s[j] > 0.0))
        throw io_error("draws: non-positive uniqueness in " + path);
    }
    d.loadings.push_back(std::move(b));
    d.uniqueness.push_back(std::move(s));
  }
  d.provenance = "file:" + path;
  d.validate();
  return d;
}

PosteriorDraws read_draws_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open for reading: " + path);
  std::string line;
  bool saw_header = false;
  // (draw, entity, row, col, value) tuples; dimensions inferred from maxima
  struct Cell {
    std::size_t draw, row, col;
    bool is_b;
    double value;
  };
  std::vector<Cell> cells;
  std::size_t max_draw = 0, max_row = 0, max_col = 0;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto toks = csv::split(line);
    if (!saw_header) {
      if (toks.size() != 5 || toks[0] != "draw" || toks[1] != "entity" ||
          toks[2] != "row" || toks[3] != "col" || toks[4] != "value")
        throw io_error("draws csv: expected header draw,entity,row,col,value");
      saw_header = true;
      continue;
    }
    if (toks.size() != 5) throw io_error("draws csv: ragged row in " + path);
    Cell c;
    c.draw = static_cast<std::size_t>(csv::parse_double(toks[0]));
    c.is_b = toks[1] == "B";
    if (!c.is_b && toks[1] != "S")
      throw io_error("draws csv: entity must be B or S in " + path);
    c.row = static_cast<std::size_t>(csv::parse_double(toks[2]));
    c.col = static_cast<std::size_t>(csv::parse_double(toks[3]));
    c.value = csv::parse_double(toks[4]);
    if (c.draw < 1 || c.row < 1 || (c.is_b ? c.col < 1 : c.col != 0))
      throw io_error("draws csv: bad indices in " + path);
    max_draw = std::max(max_draw, c.draw);
    max_row = std::max(max_row, c.row);
    if (c.is_b) max_col = std::max(max_col, c.col);
    cells.push_back(c);
  }
  if (!saw_header || cells.empty())
    throw io_error("draws csv: no data in " + path);
  PosteriorDraws d;
  d.M = max_draw;
  d.p = max_row;
  d.k = max_col;
  if (d.k < 1) throw io_error("draws csv: no loadings entries in " + path);
  d.loadings.assign(d.M, Matrix(d.p, d.k));
  d.uniqueness.assign(d.M, Vector(d.p, 0.0));
  std::vector<bool> seen_b(d.M * d.p * d.k, false);
  std::vector<bool> seen_s(d.M * d.p, false);
  for (const Cell& c : cells) {
    const std::size_t m = c.draw - 1, r = c.row - 1;
    if (c.is_b) {
      const std::size_t q = c.col - 1;
      d.loadings[m](r, q) = c.value;
      seen_b[(m * d.p + r) * d.k + q] = true;
    } else {
      d.uniqueness[m][r] = c.value;
      seen_s[m * d.p + r] = true;
    }
  }
  for (bool s : seen_b)
    if (!s) throw io_error("draws csv: missing loadings cells in " + path);
  for (bool s : seen_s)
    if (!s) throw io_error("draws csv: missing uniqueness cells in " + path);
  for (const Vector& s : d.uniqueness)
    for (double v : s)
      if (!(v > 0.0))
        throw io_error("draws: non-positive uniqueness in " + path);
  d.provenance = "file:" + path;
  d.validate();
  return d;
}

}  // namespace

void write_draws(const PosteriorDraws& draws, const std::string& path) {
  draws.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open for writing: " + path);
  f.write(kMagic, 4);
  put_u32(f, kVersion);
  put_u32(f, static_cast<std::uint32_t>(draws.p));
  put_u32(f, static_cast<std::uint32_t>(draws.k));
  put_u32(f, static_cast<std::uint32_t>(draws.M));
  for (std::size_t m = 0; m < draws.M; ++m) {
    const Matrix& b = draws.loadings[m];
    for (std::size_t i = 0; i < b.size(); ++i) put_f64(f, b.data()[i]);
    for (double s : draws.uniqueness[m]) put_f64(f, s);
  }
  if (!f) throw io_error("write failed: " + path);
}

void write_draws_csv(const PosteriorDraws& draws, const std::string& path) {
  draws.validate();
  std::ofstream f(path);
  if (!f) throw io_error("cannot open for writing: " + path);
  f << "draw,entity,row,col,value\n";
  for (std::size_t m = 0; m < draws.M; ++m) {
    const Matrix& b = draws.loadings[m];
    for (std::size_t i = 0; i < draws.p; ++i)
      for (std::size_t q = 0; q < draws.k; ++q)
        f << (m + 1) << ",B," << (i + 1) << ',' << (q + 1) << ','
          << csv::fmt(b(i, q)) << '\n';
    for (std::size_t i = 0; i < draws.p; ++i)
      f << (m + 1) << ",S," << (i + 1) << ",0,"
        << csv::fmt(draws.uniqueness[m][i]) << '\n';
  }
  if (!f) throw io_error("write failed: " + path);
}

PosteriorDraws read_draws(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open for reading: " + path);
  char magic[4] = {0, 0, 0, 0};
  f.read(magic, 4);
  if (f.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0) {
    f.seekg(0);
    return read_draws_binary(f, path);
  }
  return read_draws_csv(path);
}

}  // namespace faselect
