#pragma once

namespace nsfit {

inline constexpr const char* tool_name = "nsfit";
inline constexpr const char* tool_version = "0.1.0";

} // namespace nsfit
