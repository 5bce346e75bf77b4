#pragma once

namespace ascma {

inline constexpr const char* version = "0.1.0";

}  // namespace ascma
