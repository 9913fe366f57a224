#include "txmerge/schema.hpp"

#include <algorithm>
#include <set>

namespace txmerge {

TableDef::TableDef(std::string name, std::vector<ColumnDef> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {
  if (name_.empty()) raise(Errc::SchemaError, "table with empty name");
  if (columns_.empty())
    raise(Errc::SchemaError, "table " + name_ + " has no columns");
  std::set<std::string> seen;
  for (size_t i = 0; i < columns_.size(); ++i) {
    const ColumnDef& c = columns_[i];
    if (c.name.empty() || !seen.insert(c.name).second)
      raise(Errc::SchemaError, "table " + name_ + ": bad column name");
    if (c.type == Value::Type::Null)
      raise(Errc::SchemaError, "table " + name_ + ": column " + c.name +
                                   " cannot be typed null");
    if (c.primary_key) key_indices_.push_back(static_cast<int>(i));
  }
  if (key_indices_.empty())
    raise(Errc::SchemaError, "table " + name_ + " has no primary key");
}

int TableDef::column_index(const std::string& column) const {
  for (size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == column) return static_cast<int>(i);
  return -1;
}

int TableDef::require_column(const std::string& column) const {
  int idx = column_index(column);
  if (idx < 0)
    raise(Errc::SchemaError, "table " + name_ + " has no column " + column);
  return idx;
}

std::vector<std::string> TableDef::column_names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const ColumnDef& c : columns_) out.push_back(c.name);
  return out;
}

std::vector<std::string> TableDef::key_columns() const {
  std::vector<std::string> out;
  for (int idx : key_indices_) out.push_back(columns_[idx].name);
  return out;
}

bool TableDef::is_key_column(const std::string& column) const {
  int idx = column_index(column);
  return idx >= 0 &&
         std::find(key_indices_.begin(), key_indices_.end(), idx) !=
             key_indices_.end();
}

Schema::Schema(std::vector<TableDef> tables) : tables_(std::move(tables)) {
  std::set<std::string> seen;
  for (const TableDef& t : tables_)
    if (!seen.insert(t.name()).second)
      raise(Errc::SchemaError, "duplicate table " + t.name());
}

const TableDef* Schema::find_table(const std::string& name) const {
  for (const TableDef& t : tables_)
    if (t.name() == name) return &t;
  return nullptr;
}

const TableDef& Schema::require_table(const std::string& name) const {
  const TableDef* t = find_table(name);
  if (!t) raise(Errc::SchemaError, "unknown table " + name);
  return *t;
}

namespace {

Value::Type type_from_string(const std::string& s) {
  if (s == "integer") return Value::Type::Integer;
  if (s == "decimal") return Value::Type::Decimal;
  if (s == "text") return Value::Type::Text;
  if (s == "timestamp") return Value::Type::Timestamp;
  raise(Errc::ParseError, "unknown column type: " + s);
}

const char* type_to_string(Value::Type t) {
  switch (t) {
    case Value::Type::Integer: return "integer";
    case Value::Type::Decimal: return "decimal";
    case Value::Type::Text: return "text";
    case Value::Type::Timestamp: return "timestamp";
    default: return "null";
  }
}

}  // namespace

nlohmann::json Schema::to_json() const {
  nlohmann::json tables = nlohmann::json::array();
  for (const TableDef& t : tables_) {
    nlohmann::json cols = nlohmann::json::array();
    for (const ColumnDef& c : t.columns()) {
      nlohmann::json col{{"name", c.name}, {"type", type_to_string(c.type)}};
      if (c.primary_key) col["primary_key"] = true;
      cols.push_back(std::move(col));
    }
    tables.push_back({{"name", t.name()}, {"columns", std::move(cols)}});
  }
  return nlohmann::json{{"tables", std::move(tables)}};
}

Schema Schema::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tables") || !j["tables"].is_array())
    raise(Errc::ParseError, "schema document must carry a \"tables\" array");
  std::vector<TableDef> tables;
  for (const nlohmann::json& tj : j["tables"]) {
    if (!tj.contains("name") || !tj.contains("columns"))
      raise(Errc::ParseError, "schema table needs \"name\" and \"columns\"");
    std::vector<ColumnDef> cols;
    for (const nlohmann::json& cj : tj["columns"]) {
      ColumnDef c;
      c.name = cj.at("name").get<std::string>();
      c.type = type_from_string(cj.at("type").get<std::string>());
      c.primary_key = cj.value("primary_key", false);
      cols.push_back(std::move(c));
    }
    tables.emplace_back(tj["name"].get<std::string>(), std::move(cols));
  }
  return Schema(std::move(tables));
}

}  // namespace txmerge
