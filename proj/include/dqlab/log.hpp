#pragma once

#include <string>

namespace dqlab {

// Verbosity comes from the DQLAB_LOG environment variable
// (quiet|info|debug, or 0|1|2). Messages go to stderr so stdout stays
// machine-readable.
enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level();

void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace dqlab
