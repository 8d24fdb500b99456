#pragma once

namespace ok {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ok
