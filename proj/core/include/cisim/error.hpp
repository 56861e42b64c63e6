#pragma once

#include <stdexcept>
#include <string>

namespace cisim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error { using Error::Error; };
class InvalidArgument : public Error { using Error::Error; };
class LayoutError : public Error { using Error::Error; };
class TruncationError : public Error { using Error::Error; };
class IntegrationError : public Error { using Error::Error; };
class SpecError : public Error { using Error::Error; };
class UnknownParameter : public Error { using Error::Error; };
class NoNullFound : public Error { using Error::Error; };

// Raised for schema violations; `path` names the offending field.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace cisim
