#pragma once

namespace acnn {

inline constexpr int kVersionMajor = 1;
inline constexpr int kVersionMinor = 0;
inline constexpr int kVersionPatch = 0;
inline constexpr const char* kVersionString = "1.0.0";

// On-disk network container format version (see network_runtime.hpp).
inline constexpr unsigned kNetworkFormatVersion = 1;

}  // namespace acnn
