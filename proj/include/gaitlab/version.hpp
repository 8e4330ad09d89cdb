#pragma once

namespace gaitlab {
inline constexpr const char* kVersion = "0.1.0";
}
