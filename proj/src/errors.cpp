#include "txmerge/errors.hpp"

namespace txmerge {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::SchemaError: return "SchemaError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::ArityError: return "ArityError";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::KeyCollision: return "KeyCollision";
    case Errc::NotCommutative: return "NotCommutative";
    case Errc::OrphanRow: return "OrphanRow";
    case Errc::StaleVersion: return "StaleVersion";
    case Errc::UnknownTransaction: return "UnknownTransaction";
    case Errc::QueueFull: return "QueueFull";
    case Errc::InvalidState: return "InvalidState";
    case Errc::Retryable: return "Retryable";
    case Errc::ConstraintViolation: return "ConstraintViolation";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::ActiveTxn: return "ActiveTxn";
    case Errc::ServiceUnreachable: return "ServiceUnreachable";
    case Errc::UnsupportedConstruct: return "UnsupportedConstruct";
    case Errc::ParseError: return "ParseError";
    case Errc::InternalError: return "InternalError";
  }
  return "UnknownError";
}

}  // namespace txmerge
