#pragma once

namespace selfdetect {

inline constexpr const char* kToolName = "selfdetect";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace selfdetect
