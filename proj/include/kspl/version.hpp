#pragma once

namespace kspl {

inline constexpr const char* kToolkitVersion = "0.1.0";

} // namespace kspl
