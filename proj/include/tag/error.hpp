#pragma once

#include <stdexcept>
#include <string>

namespace tag {

// Error categories map onto CLI exit codes: usage/config -> 1,
// data/format -> 2, numerical -> 3.
enum class ErrorKind { InvalidArgument, Config, Domain, Format, Io, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) { return {ErrorKind::InvalidArgument, what}; }
inline Error config_error(const std::string& what) { return {ErrorKind::Config, what}; }
inline Error domain_error(const std::string& what) { return {ErrorKind::Domain, what}; }
inline Error format_error(const std::string& what) { return {ErrorKind::Format, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::Io, what}; }
inline Error numerical_error(const std::string& what) { return {ErrorKind::Numerical, what}; }

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Config:
      return 1;
    case ErrorKind::Domain:
    case ErrorKind::Format:
    case ErrorKind::Io:
      return 2;
    case ErrorKind::Numerical:
      return 3;
  }
  return 1;
}

}  // namespace tag
