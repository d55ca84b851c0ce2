#pragma once

namespace synckit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace synckit
