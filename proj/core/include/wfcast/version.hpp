#pragma once

namespace wfcast {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace wfcast
