#pragma once

#include <stdexcept>
#include <string>

namespace txmerge {

// Error taxonomy shared by every layer.  Retryable is the only code a client
// is expected to act on automatically (back off and resubmit); everything
// else signals a caller bug, a validation failure, or an internal invariant
// break.
enum class Errc {
  SchemaError,
  ValidationError,
  ArityError,
  ShapeMismatch,
  KeyCollision,
  NotCommutative,
  OrphanRow,
  StaleVersion,
  UnknownTransaction,
  QueueFull,
  InvalidState,
  Retryable,
  ConstraintViolation,
  TypeMismatch,
  ActiveTxn,
  ServiceUnreachable,
  UnsupportedConstruct,
  ParseError,
  InternalError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace txmerge
