#include "vip/common.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace vip {

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("VIP_LOG");
    if (env == nullptr) return LogLevel::warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::error;
    if (std::strcmp(env, "warn") == 0) return LogLevel::warn;
    if (std::strcmp(env, "info") == 0) return LogLevel::info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    return LogLevel::warn;
  }();
  return level;
}

void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[vip:%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

}  // namespace vip
