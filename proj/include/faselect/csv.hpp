#pragma once

#include <string>
#include <vector>

#include "faselect/matrix.hpp"

namespace faselect::csv {

// round-trip decimal formatting for 64-bit floats
std::string fmt(double v);

double parse_double(const std::string& tok);

std::vector<std::string> split(const std::string& line, char sep = ',');

// headerless numeric matrix; lines starting with '#' are skipped on read
void write_matrix(const Matrix& m, const std::string& path,
                  const std::string& comment = "");
Matrix read_matrix(const std::string& path);

// one value per line
void write_vector(const Vector& v, const std::string& path,
                  const std::string& comment = "");
Vector read_vector(const std::string& path);

// observation matrix with header v1..vp
void write_dataset(const Matrix& rows, const std::string& path,
                   const std::string& comment = "");
Matrix read_dataset(const std::string& path);

}  // namespace faselect::csv
