#pragma once

#include <string>

#include "faselect/core.hpp"

namespace faselect {

// binary draws container: magic "DSSF", version u32=1, then p, k, M as u32,
// then M records of p*k row-major loadings followed by p uniqueness values,
// everything little-endian 64-bit floats
void write_draws(const PosteriorDraws& draws, const std::string& path);

// CSV alternative with header draw,entity,row,col,value; entity B or S,
// indices 1-based, S rows use col=0
void write_draws_csv(const PosteriorDraws& draws, const std::string& path);

// sniffs the magic bytes and reads either format; validates header fields,
// payload completeness, and uniqueness positivity
PosteriorDraws read_draws(const std::string& path);

}  // namespace faselect
