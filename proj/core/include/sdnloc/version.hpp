#pragma once

namespace sdnloc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sdnloc
