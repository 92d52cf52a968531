#pragma once

#include <stdexcept>
#include <string>

namespace ergokit {

/// Broad failure classes. The CLI maps them onto exit codes.
enum class ErrorKind {
  Config,        // invalid parameters, schema problems
  Numerical,     // quadrature, eigensolver or integrator failure
  Verification,  // a check ran to completion and failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return {ErrorKind::Config, what}; }
inline Error numerical_error(const std::string& what) { return {ErrorKind::Numerical, what}; }

}  // namespace ergokit
