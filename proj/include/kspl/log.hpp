#pragma once

#include <string>

namespace kspl {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

// Level comes from the KSPL_LOG environment variable ("quiet", "info",
// "debug"); default info. Messages go to stderr so stdout stays clean.
LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

} // namespace kspl
