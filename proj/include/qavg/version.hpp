#pragma once

namespace qavg {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace qavg
