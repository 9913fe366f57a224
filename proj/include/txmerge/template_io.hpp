#pragma once

#include <string>

#include "json.hpp"
#include "txmerge/statement.hpp"

namespace txmerge {

// JSON (de)serialization for transaction templates.  Statements are stored
// structurally (kind, table, predicate tree, assignment expressions), never
// as raw SQL text, so loaded templates feed the analyzer and rewriter
// directly.  from_json validates against the schema before returning.

nlohmann::json template_to_json(const TransactionTemplate& tmpl);
TransactionTemplate template_from_json(const nlohmann::json& j, const Schema& schema);

nlohmann::json operand_to_json(const Operand& o);
Operand operand_from_json(const nlohmann::json& j);
nlohmann::json predicate_to_json(const Predicate& p);
Predicate predicate_from_json(const nlohmann::json& j);

Schema load_schema_file(const std::string& path);
TransactionTemplate load_template_file(const std::string& path, const Schema& schema);
nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace txmerge
