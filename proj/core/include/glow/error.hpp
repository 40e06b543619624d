#pragma once

#include <stdexcept>
#include <string>

namespace glow {

inline constexpr const char* kVersion = "0.1.0";

// All recoverable failures surface as glow::Error. The message is a single
// line so the CLI can forward it verbatim with a machine-parseable prefix.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& msg) : Error(msg) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& msg) : Error(msg) {}
};

}  // namespace glow
