#pragma once

namespace evolim {
inline constexpr const char* kVersion = "0.1.0";
}
