#include "dqlab/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <string_view>

namespace dqlab {
namespace {

LogLevel parse_level() {
  const char* env = std::getenv("DQLAB_LOG");
  if (env == nullptr) return LogLevel::Info;
  std::string_view v(env);
  if (v == "quiet" || v == "0") return LogLevel::Quiet;
  if (v == "info" || v == "1") return LogLevel::Info;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

}  // namespace

LogLevel log_level() {
  static const LogLevel level = parse_level();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::fprintf(stderr, "[dqlab] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::fprintf(stderr, "[dqlab:debug] %s\n", msg.c_str());
}

}  // namespace dqlab
