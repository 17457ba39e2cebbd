#pragma once

namespace spade {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace spade
