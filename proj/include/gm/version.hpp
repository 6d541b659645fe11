#pragma once

namespace gm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gm
