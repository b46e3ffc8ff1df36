#pragma once

#include <stdexcept>
#include <string>

namespace ballchain {

/// Invalid input description (scene, chain, run configuration). The CLI maps
/// it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while evaluating the model or solver (e.g. a ball coinciding with
/// a sensor). The CLI maps it to exit code 3.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ballchain
