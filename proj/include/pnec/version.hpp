#pragma once

namespace pnec {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pnec
