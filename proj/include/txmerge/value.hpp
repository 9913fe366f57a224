#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "txmerge/errors.hpp"

namespace txmerge {

// Runtime cell value.  Decimal is fixed-point with two fractional digits,
// stored as a scaled integer (25.50 -> 2550) so arithmetic stays exact.
// Timestamp is milliseconds since the Unix epoch.  Values of different
// types never compare equal; ordering across types falls back to the type
// tag so heterogeneous values can live in ordered containers.
class Value {
 public:
  enum class Type : uint8_t { Null = 0, Integer, Decimal, Text, Timestamp };

  Value() : type_(Type::Null) {}

  static Value null() { return Value(); }
  static Value integer(int64_t v) { return Value(Type::Integer, v); }
  static Value decimal_scaled(int64_t hundredths) {
    return Value(Type::Decimal, hundredths);
  }
  static Value decimal(const std::string& text);  // "25.50", "-3", "0.07"
  static Value text(std::string v) {
    Value out(Type::Text, 0);
    out.text_ = std::move(v);
    return out;
  }
  static Value timestamp(int64_t millis) { return Value(Type::Timestamp, millis); }

  Type type() const { return type_; }
  bool is_null() const { return type_ == Type::Null; }

  int64_t as_integer() const { return require(Type::Integer); }
  int64_t scaled_decimal() const { return require(Type::Decimal); }
  int64_t as_timestamp() const { return require(Type::Timestamp); }
  const std::string& as_text() const {
    if (type_ != Type::Text) raise(Errc::TypeMismatch, "value is not text");
    return text_;
  }

  // SQL literal form: 42, 25.50, 'O''Brien', NULL.  Timestamps render as
  // their integer millisecond count.
  std::string to_sql() const;

  nlohmann::json to_json() const;
  static Value from_json(const nlohmann::json& j);

  bool operator==(const Value& o) const {
    return type_ == o.type_ && num_ == o.num_ && text_ == o.text_;
  }
  bool operator!=(const Value& o) const { return !(*this == o); }
  bool operator<(const Value& o) const {
    if (type_ != o.type_) return type_ < o.type_;
    if (type_ == Type::Text) return text_ < o.text_;
    return num_ < o.num_;
  }

  static const char* type_name(Type t);

 private:
  Value(Type t, int64_t num) : type_(t), num_(num) {}

  int64_t require(Type t) const {
    if (type_ != t)
      raise(Errc::TypeMismatch, std::string("value is not ") + type_name(t));
    return num_;
  }

  Type type_;
  int64_t num_ = 0;
  std::string text_;
};

using KeyTuple = std::vector<Value>;

std::string decimal_to_string(int64_t hundredths);

}  // namespace txmerge
