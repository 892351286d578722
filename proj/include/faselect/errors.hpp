#pragma once

#include <stdexcept>

namespace faselect {

// configuration / argument problems; CLI maps these to exit code 2
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// numerical failures (non-SPD matrices, diverged chains); exit code 3
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// file system and format failures; exit code 4
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace faselect
