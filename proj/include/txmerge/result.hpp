#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "txmerge/value.hpp"

namespace txmerge {

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  int64_t affected = 0;  // insert/update/delete row count

  int column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }

  const Value& at(size_t row, const std::string& name) const {
    int idx = column_index(name);
    if (idx < 0 || row >= rows.size())
      raise(Errc::InternalError, "result has no cell " + name);
    return rows[row][static_cast<size_t>(idx)];
  }

  nlohmann::json to_json() const {
    nlohmann::json rj = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json r = nlohmann::json::array();
      for (const Value& v : row) r.push_back(v.to_json());
      rj.push_back(std::move(r));
    }
    return nlohmann::json{{"columns", columns}, {"rows", std::move(rj)},
                          {"affected", affected}};
  }

  static ResultSet from_json(const nlohmann::json& j) {
    ResultSet out;
    out.columns = j.at("columns").get<std::vector<std::string>>();
    for (const nlohmann::json& row : j.at("rows")) {
      std::vector<Value> r;
      for (const nlohmann::json& vj : row) r.push_back(Value::from_json(vj));
      out.rows.push_back(std::move(r));
    }
    out.affected = j.value("affected", 0);
    return out;
  }

  bool operator==(const ResultSet& o) const {
    return columns == o.columns && rows == o.rows && affected == o.affected;
  }
};

}  // namespace txmerge
