#pragma once

namespace dsl {
inline constexpr const char* kVersion = "0.1.0";
}
