#pragma once

#include <stdexcept>
#include <string>

namespace pchan {

// Error categories map 1:1 onto CLI exit codes and C API status values:
// config = 2, data = 3, numeric = 4.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pchan
