#pragma once

#include <stdexcept>
#include <string>

namespace qavg {

/// Thrown when a computation would exceed a configured resource ceiling
/// (term budget, 64-bit value range, or the exact-arithmetic bit cap).
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qavg
