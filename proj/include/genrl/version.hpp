#pragma once

namespace genrl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace genrl
