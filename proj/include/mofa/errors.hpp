#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mofa {

// Error classes map 1:1 onto CLI exit codes: config=2, data=3, backend=4,
// internal=5. Every thrown error carries a stable `code` string naming the
// variant (e.g. "DuplicateName") so callers can match without parsing text.
enum class ErrorClass { config, data, backend, internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string code, const std::string& message)
      : std::runtime_error(message), cls_(cls), code_(std::move(code)) {}

  ErrorClass error_class() const { return cls_; }
  const std::string& code() const { return code_; }

 private:
  ErrorClass cls_;
  std::string code_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string code, const std::string& message)
      : Error(ErrorClass::config, std::move(code), message) {}
};

class DataError : public Error {
 public:
  DataError(std::string code, const std::string& message)
      : Error(ErrorClass::data, std::move(code), message) {}
};

class BackendError : public Error {
 public:
  BackendError(std::string code, const std::string& message)
      : Error(ErrorClass::backend, std::move(code), message) {}
};

class InternalError : public Error {
 public:
  InternalError(std::string code, const std::string& message)
      : Error(ErrorClass::internal, std::move(code), message) {}
};

inline int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::config: return 2;
    case ErrorClass::data: return 3;
    case ErrorClass::backend: return 4;
    case ErrorClass::internal: return 5;
  }
  return 5;
}

inline const char* error_class_name(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::config: return "config";
    case ErrorClass::data: return "data";
    case ErrorClass::backend: return "backend";
    case ErrorClass::internal: return "internal";
  }
  return "internal";
}

}  // namespace mofa
