#pragma once

#include <stdexcept>
#include <string>

namespace levy_optstop {

enum class ErrorKind {
  InvalidParameter,
  PoleProximity,
  MissingPhi,
  Domain,
  FinitenessViolation,
  OptimizerFailure,
  NotApplicable,
  Config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace levy_optstop
