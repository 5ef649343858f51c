#pragma once

namespace qsld {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qsld
