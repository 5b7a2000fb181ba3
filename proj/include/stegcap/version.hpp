#pragma once

#define STEGCAP_VERSION "0.1.0"

// Overridden by the build with `git describe` output when available.
#ifndef STEGCAP_BUILD_ID
#define STEGCAP_BUILD_ID "unknown"
#endif

namespace stegcap {

inline constexpr const char* kVersion = STEGCAP_VERSION;
inline constexpr const char* kBuildId = STEGCAP_BUILD_ID;

}  // namespace stegcap
