#pragma once

namespace shillsim {

inline constexpr const char* kToolName = "shillsim";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace shillsim
