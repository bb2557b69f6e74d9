#pragma once

#include <iostream>
#include <string>

namespace pchan {

inline void log_warn(const std::string& msg) {
  std::cerr << "[paretochan] warning: " << msg << "\n";
}

inline void log_info(const std::string& msg) {
  std::cerr << "[paretochan] " << msg << "\n";
}

}  // namespace pchan
