#include "txmerge/value.hpp"

#include <cctype>
#include <cstdlib>

namespace txmerge {

const char* Value::type_name(Type t) {
  switch (t) {
    case Type::Null: return "null";
    case Type::Integer: return "integer";
    case Type::Decimal: return "decimal";
    case Type::Text: return "text";
    case Type::Timestamp: return "timestamp";
  }
  return "?";
}

std::string decimal_to_string(int64_t hundredths) {
  int64_t whole = hundredths / 100;
  int64_t frac = hundredths % 100;
  std::string out;
  if (hundredths < 0) {
    out = "-";
    whole = -whole;
    frac = -frac;
  }
  out += std::to_string(whole);
  out += '.';
  if (frac < 10) out += '0';
  out += std::to_string(frac);
  return out;
}

Value Value::decimal(const std::string& text) {
  if (text.empty()) raise(Errc::ParseError, "empty decimal literal");
  size_t pos = 0;
  bool neg = false;
  if (text[pos] == '-' || text[pos] == '+') {
    neg = text[pos] == '-';
    ++pos;
  }
  if (pos >= text.size()) raise(Errc::ParseError, "bare sign in decimal literal");
  int64_t whole = 0;
  bool any_digit = false;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    whole = whole * 10 + (text[pos] - '0');
    any_digit = true;
    ++pos;
  }
  int64_t frac = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (digits >= 2)
        raise(Errc::ParseError, "decimal precision beyond hundredths: " + text);
      frac = frac * 10 + (text[pos] - '0');
      ++digits;
      ++pos;
      any_digit = true;
    }
    if (digits == 1) frac *= 10;
  }
  if (!any_digit || pos != text.size())
    raise(Errc::ParseError, "malformed decimal literal: " + text);
  int64_t scaled = whole * 100 + frac;
  return decimal_scaled(neg ? -scaled : scaled);
}

std::string Value::to_sql() const {
  switch (type_) {
    case Type::Null:
      return "NULL";
    case Type::Integer:
    case Type::Timestamp:
      return std::to_string(num_);
    case Type::Decimal:
      return decimal_to_string(num_);
    case Type::Text: {
      std::string out = "'";
      for (char c : text_) {
        out += c;
        if (c == '\'') out += '\'';
      }
      out += '\'';
      return out;
    }
  }
  return "NULL";
}

nlohmann::json Value::to_json() const {
  switch (type_) {
    case Type::Null: return nullptr;
    case Type::Integer: return num_;
    case Type::Decimal: return nlohmann::json{{"dec", decimal_to_string(num_)}};
    case Type::Timestamp: return nlohmann::json{{"ts", num_}};
    case Type::Text: return text_;
  }
  return nullptr;
}

Value Value::from_json(const nlohmann::json& j) {
  if (j.is_null()) return null();
  if (j.is_number_integer()) return integer(j.get<int64_t>());
  if (j.is_string()) return text(j.get<std::string>());
  if (j.is_object() && j.size() == 1) {
    if (j.contains("dec")) {
      if (!j["dec"].is_string())
        raise(Errc::ParseError, "\"dec\" wrapper must hold a string");
      return decimal(j["dec"].get<std::string>());
    }
    if (j.contains("ts")) {
      if (!j["ts"].is_number_integer())
        raise(Errc::ParseError, "\"ts\" wrapper must hold an integer");
      return timestamp(j["ts"].get<int64_t>());
    }
  }
  raise(Errc::ParseError, "unrepresentable value: " + j.dump());
}

}  // namespace txmerge
