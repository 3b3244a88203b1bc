#pragma once

namespace steinmd {

inline constexpr const char* version = "0.1.0";

/// Schema version of every CSV and JSON document the tools emit.
inline constexpr int output_schema_version = 1;

}  // namespace steinmd
