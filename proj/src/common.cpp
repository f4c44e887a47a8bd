#include "ncvem/common.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace ncvem {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("NCVEM_LOG");
    if (env == nullptr) return LogLevel::Error;
    const std::string s(env);
    if (s == "debug") return LogLevel::Debug;
    if (s == "info") return LogLevel::Info;
    return LogLevel::Error;
  }();
  return level;
}

void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  const char* tag = level == LogLevel::Error ? "error" : (level == LogLevel::Info ? "info" : "debug");
  std::cerr << "ncvem: [" << tag << "] " << msg << "\n";
}

} // namespace ncvem
