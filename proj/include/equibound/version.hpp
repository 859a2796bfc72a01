#pragma once

namespace equibound {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace equibound
