#pragma once

#include <stdexcept>
#include <string>

namespace dceformer {

/// Raised for every contract violation in the library (bad shapes,
/// malformed files, degenerate inputs). The message names the offending
/// quantity so callers can surface it unchanged.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dceformer
