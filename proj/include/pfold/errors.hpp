#pragma once

#include <stdexcept>
#include <string>

namespace pfold {

enum class ErrorKind {
  Parameter,           // invalid argument outside a type's invariants
  Domain,              // evaluation outside a nonlinearity's domain (e.g. MEMS t >= 1)
  Tolerance,           // requested accuracy not reached
  Divergence,          // non-integrable integrand detected
  Bracket,             // root bracketing failed
  Quench,              // MEMS profile touched u = 1
  Stiffness,           // ODE step size underflow
  Regime,              // (p, n) outside the regime an estimate applies to
  InvariantViolation,  // input data violates a documented invariant
  Config,              // configuration validation failure
  Io,
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Tolerance failures carry the error bound that was actually achieved.
class ToleranceError : public Error {
 public:
  ToleranceError(const std::string& msg, double achieved)
      : Error(ErrorKind::Tolerance, msg), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Tolerance: return "tolerance failure";
    case ErrorKind::Divergence: return "divergence error";
    case ErrorKind::Bracket: return "bracket error";
    case ErrorKind::Quench: return "quench error";
    case ErrorKind::Stiffness: return "stiffness error";
    case ErrorKind::Regime: return "regime error";
    case ErrorKind::InvariantViolation: return "invariant violation";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

}  // namespace pfold
