#pragma once

namespace rttlens {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rttlens
