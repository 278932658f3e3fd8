#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace votetrace {

enum class ErrorKind { usage, io, parse, data, internal };

// Every failure raised by the core carries the module that raised it, so the
// C layer and the CLI can report module-qualified codes ("ingest.parse").
class Error : public std::runtime_error {
public:
  Error(std::string module, ErrorKind kind, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)), kind_(kind) {}

  const std::string& module() const noexcept { return module_; }
  ErrorKind kind() const noexcept { return kind_; }

  std::string code() const { return module_ + "." + kind_name(kind_); }

  static const char* kind_name(ErrorKind kind) noexcept {
    switch (kind) {
      case ErrorKind::usage: return "usage";
      case ErrorKind::io: return "io";
      case ErrorKind::parse: return "parse";
      case ErrorKind::data: return "data";
      case ErrorKind::internal: return "internal";
    }
    return "internal";
  }

private:
  std::string module_;
  ErrorKind kind_;
};

}  // namespace votetrace
