#pragma once

namespace sheetlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sheetlab
