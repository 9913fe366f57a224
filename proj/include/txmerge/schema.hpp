#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "txmerge/value.hpp"

namespace txmerge {

struct ColumnDef {
  std::string name;
  Value::Type type = Value::Type::Integer;
  bool primary_key = false;
};

// Table description.  Primary-key columns, taken in declaration order, form
// the row key used by the storage engine and by row-level locking.
class TableDef {
 public:
  TableDef() = default;
  TableDef(std::string name, std::vector<ColumnDef> columns);

  const std::string& name() const { return name_; }
  const std::vector<ColumnDef>& columns() const { return columns_; }
  const std::vector<int>& key_indices() const { return key_indices_; }

  int column_index(const std::string& column) const;       // -1 if absent
  int require_column(const std::string& column) const;     // SchemaError if absent
  const ColumnDef& column(int index) const { return columns_[index]; }
  std::vector<std::string> column_names() const;
  std::vector<std::string> key_columns() const;
  bool is_key_column(const std::string& column) const;

 private:
  std::string name_;
  std::vector<ColumnDef> columns_;
  std::vector<int> key_indices_;
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<TableDef> tables);

  const TableDef* find_table(const std::string& name) const;
  const TableDef& require_table(const std::string& name) const;
  const std::vector<TableDef>& tables() const { return tables_; }

  nlohmann::json to_json() const;
  static Schema from_json(const nlohmann::json& j);

 private:
  std::vector<TableDef> tables_;
};

}  // namespace txmerge
