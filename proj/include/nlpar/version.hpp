#pragma once

namespace nlpar {

inline constexpr const char* code_version = "0.1.0";

}  // namespace nlpar
