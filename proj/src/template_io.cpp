#include "txmerge/template_io.hpp"

#include <fstream>
#include <sstream>

namespace txmerge {

using nlohmann::json;

nlohmann::json operand_to_json(const Operand& o) {
  switch (o.kind) {
    case Operand::Kind::Literal: return o.literal.to_json();
    case Operand::Kind::Param: return json{{"param", o.param_slot}};
    case Operand::Kind::Column: return json{{"column", o.column}};
  }
  return nullptr;
}

Operand operand_from_json(const json& j) {
  if (j.is_object() && j.size() == 1) {
    if (j.contains("param")) {
      int slot = j["param"].get<int>();
      if (slot < 0) raise(Errc::ParseError, "negative parameter slot");
      return Operand::param(slot);
    }
    if (j.contains("column")) return Operand::col(j["column"].get<std::string>());
  }
  return Operand::lit(Value::from_json(j));
}

nlohmann::json predicate_to_json(const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::Eq:
      return json{{"eq", json::array({p.column, operand_to_json(p.operand)})}};
    case Predicate::Kind::In: {
      json list = json::array();
      for (const Operand& o : p.list) list.push_back(operand_to_json(o));
      return json{{"in", json::array({p.column, std::move(list)})}};
    }
    case Predicate::Kind::TupleIn: {
      json tuples = json::array();
      for (const auto& tup : p.tuples) {
        json row = json::array();
        for (const Operand& o : tup) row.push_back(operand_to_json(o));
        tuples.push_back(std::move(row));
      }
      return json{{"tuple_in", json::array({p.columns, std::move(tuples)})}};
    }
    case Predicate::Kind::And:
    case Predicate::Kind::Or: {
      json kids = json::array();
      for (const Predicate& c : p.children) kids.push_back(predicate_to_json(c));
      return json{{p.kind == Predicate::Kind::And ? "and" : "or", std::move(kids)}};
    }
  }
  return nullptr;
}

Predicate predicate_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1)
    raise(Errc::ParseError, "predicate must be a single-key object: " + j.dump());
  if (j.contains("eq")) {
    const json& a = j["eq"];
    if (!a.is_array() || a.size() != 2)
      raise(Errc::ParseError, "\"eq\" takes [column, operand]");
    return Predicate::eq(a[0].get<std::string>(), operand_from_json(a[1]));
  }
  if (j.contains("in")) {
    const json& a = j["in"];
    if (!a.is_array() || a.size() != 2 || !a[1].is_array())
      raise(Errc::ParseError, "\"in\" takes [column, [operands]]");
    std::vector<Operand> list;
    for (const json& oj : a[1]) list.push_back(operand_from_json(oj));
    return Predicate::in(a[0].get<std::string>(), std::move(list));
  }
  if (j.contains("tuple_in")) {
    const json& a = j["tuple_in"];
    if (!a.is_array() || a.size() != 2 || !a[0].is_array() || !a[1].is_array())
      raise(Errc::ParseError, "\"tuple_in\" takes [[columns], [[operands]]]");
    std::vector<std::string> cols = a[0].get<std::vector<std::string>>();
    std::vector<std::vector<Operand>> tuples;
    for (const json& row : a[1]) {
      std::vector<Operand> tup;
      for (const json& oj : row) tup.push_back(operand_from_json(oj));
      tuples.push_back(std::move(tup));
    }
    return Predicate::tuple_in(std::move(cols), std::move(tuples));
  }
  if (j.contains("and") || j.contains("or")) {
    bool is_and = j.contains("and");
    const json& a = is_and ? j["and"] : j["or"];
    if (!a.is_array()) raise(Errc::ParseError, "\"and\"/\"or\" take an array");
    std::vector<Predicate> kids;
    for (const json& cj : a) kids.push_back(predicate_from_json(cj));
    return is_and ? Predicate::conj(std::move(kids))
                  : Predicate::disj(std::move(kids));
  }
  raise(Errc::ParseError, "unknown predicate form: " + j.dump());
}

namespace {

json expr_to_json(const AssignExpr& e) {
  switch (e.kind) {
    case AssignExpr::Kind::Set:
      return json{{"set", operand_to_json(e.operand)}};
    case AssignExpr::Kind::Delta:
      return json{{"delta", json{{"base", e.base_column},
                                 {"add", operand_to_json(e.delta)}}}};
    case AssignExpr::Kind::CaseWhen: {
      json branches = json::array();
      for (const CaseBranch& b : e.branches)
        branches.push_back(json{{"when", predicate_to_json(b.when)},
                                {"then", expr_to_json(b.then)}});
      return json{{"case", json{{"branches", std::move(branches)},
                                {"else", expr_to_json(e.else_expr[0])}}}};
    }
    case AssignExpr::Kind::SelfRef:
      return json("self");
  }
  return nullptr;
}

AssignExpr expr_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "self") return AssignExpr::self();
  if (!j.is_object() || j.size() != 1)
    raise(Errc::ParseError, "assignment expression must be a single-key object");
  if (j.contains("set")) return AssignExpr::set(operand_from_json(j["set"]));
  if (j.contains("delta")) {
    const json& d = j["delta"];
    return AssignExpr::plus(d.at("base").get<std::string>(),
                            operand_from_json(d.at("add")));
  }
  if (j.contains("case")) {
    const json& c = j["case"];
    std::vector<CaseBranch> branches;
    for (const json& bj : c.at("branches"))
      branches.push_back(CaseBranch{predicate_from_json(bj.at("when")),
                                    expr_from_json(bj.at("then"))});
    return AssignExpr::case_when(std::move(branches), expr_from_json(c.at("else")));
  }
  raise(Errc::ParseError, "unknown assignment expression: " + j.dump());
}

json proj_to_json(const ProjItem& p) {
  switch (p.kind) {
    case ProjItem::Kind::Column:
      if (p.alias.empty()) return json(p.column);
      return json{{"column", p.column}, {"alias", p.alias}};
    case ProjItem::Kind::SumColumn: {
      json out{{"sum", p.column}};
      if (!p.alias.empty()) out["alias"] = p.alias;
      return out;
    }
    case ProjItem::Kind::SumProduct: {
      json out{{"sum_product", json::array({p.column, p.column2})}};
      if (!p.alias.empty()) out["alias"] = p.alias;
      return out;
    }
  }
  return nullptr;
}

ProjItem proj_from_json(const json& j) {
  if (j.is_string()) return ProjItem::col(j.get<std::string>());
  if (!j.is_object()) raise(Errc::ParseError, "bad projection item: " + j.dump());
  std::string alias = j.value("alias", "");
  if (j.contains("column")) return ProjItem::col(j["column"].get<std::string>(), alias);
  if (j.contains("sum")) return ProjItem::sum(j["sum"].get<std::string>(), alias);
  if (j.contains("sum_product")) {
    const json& a = j["sum_product"];
    if (!a.is_array() || a.size() != 2)
      raise(Errc::ParseError, "\"sum_product\" takes [column, column]");
    return ProjItem::sum_product(a[0].get<std::string>(), a[1].get<std::string>(), alias);
  }
  raise(Errc::ParseError, "unknown projection item: " + j.dump());
}

json statement_to_json(const TemplateStatement& ts) {
  const Statement& s = ts.stmt;
  json out{{"kind", statement_kind_name(s.kind)}, {"table", s.table}};
  if (!s.projection.empty()) {
    json proj = json::array();
    for (const ProjItem& p : s.projection) proj.push_back(proj_to_json(p));
    out["projection"] = std::move(proj);
  }
  if (!s.group_by.empty()) out["group_by"] = s.group_by;
  if (s.for_update) out["for_update"] = true;
  if (s.predicate) out["where"] = predicate_to_json(*s.predicate);
  if (!s.assignments.empty()) {
    json assigns = json::array();
    for (const Assignment& a : s.assignments)
      assigns.push_back(json{{"column", a.column}, {"expr", expr_to_json(a.expr)}});
    out["assignments"] = std::move(assigns);
  }
  if (!s.insert_columns.empty()) {
    out["columns"] = s.insert_columns;
    json rows = json::array();
    for (const auto& row : s.insert_rows) {
      json rj = json::array();
      for (const Operand& o : row) rj.push_back(operand_to_json(o));
      rows.push_back(std::move(rj));
    }
    out["rows"] = std::move(rows);
  }
  out["reads"] = std::vector<std::string>(s.reads.begin(), s.reads.end());
  out["writes"] = std::vector<std::string>(s.writes.begin(), s.writes.end());
  if (s.distinct_key) out["distinct_key"] = true;
  if (ts.per_loop_item) out["per_loop_item"] = true;
  if (!ts.inputs.empty()) {
    json inputs = json::array();
    for (const TemplateStatement::Dataflow& d : ts.inputs)
      inputs.push_back(json{{"from", d.from_stmt}, {"columns", d.columns}});
    out["inputs"] = std::move(inputs);
  }
  return out;
}

TemplateStatement statement_from_json(const json& j) {
  TemplateStatement ts;
  Statement& s = ts.stmt;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "select") s.kind = StatementKind::Select;
  else if (kind == "insert") s.kind = StatementKind::Insert;
  else if (kind == "update") s.kind = StatementKind::Update;
  else if (kind == "delete") s.kind = StatementKind::Delete;
  else raise(Errc::ParseError, "unknown statement kind: " + kind);
  s.table = j.at("table").get<std::string>();
  if (j.contains("projection"))
    for (const json& pj : j["projection"]) s.projection.push_back(proj_from_json(pj));
  if (j.contains("group_by")) s.group_by = j["group_by"].get<std::vector<std::string>>();
  s.for_update = j.value("for_update", false);
  if (j.contains("where")) s.predicate = predicate_from_json(j["where"]);
  if (j.contains("assignments"))
    for (const json& aj : j["assignments"])
      s.assignments.push_back(Assignment{aj.at("column").get<std::string>(),
                                         expr_from_json(aj.at("expr"))});
  if (j.contains("columns")) {
    s.insert_columns = j["columns"].get<std::vector<std::string>>();
    for (const json& row : j.at("rows")) {
      std::vector<Operand> r;
      for (const json& oj : row) r.push_back(operand_from_json(oj));
      s.insert_rows.push_back(std::move(r));
    }
  }
  if (j.contains("reads"))
    for (const json& c : j["reads"]) s.reads.insert(c.get<std::string>());
  if (j.contains("writes"))
    for (const json& c : j["writes"]) s.writes.insert(c.get<std::string>());
  s.distinct_key = j.value("distinct_key", false);
  ts.per_loop_item = j.value("per_loop_item", false);
  if (j.contains("inputs"))
    for (const json& ij : j["inputs"])
      ts.inputs.push_back(TemplateStatement::Dataflow{
          ij.at("from").get<int>(),
          ij.at("columns").get<std::vector<std::string>>()});
  return ts;
}

}  // namespace

nlohmann::json template_to_json(const TransactionTemplate& tmpl) {
  json stmts = json::array();
  for (const TemplateStatement& ts : tmpl.statements)
    stmts.push_back(statement_to_json(ts));
  json out{{"name", tmpl.name}, {"statements", std::move(stmts)}};
  out["partition_key"] = tmpl.partition_key;
  if (!tmpl.promoted_groups.empty()) {
    json groups = json::array();
    for (const auto& [lo, hi] : tmpl.promoted_groups)
      groups.push_back(json::array({lo, hi}));
    out["promoted_groups"] = std::move(groups);
  }
  return out;
}

TransactionTemplate template_from_json(const nlohmann::json& j, const Schema& schema) {
  TransactionTemplate tmpl;
  tmpl.name = j.at("name").get<std::string>();
  for (const json& sj : j.at("statements"))
    tmpl.statements.push_back(statement_from_json(sj));
  if (j.contains("partition_key"))
    tmpl.partition_key = j["partition_key"].get<std::vector<std::string>>();
  if (j.contains("promoted_groups"))
    for (const json& g : j["promoted_groups"]) {
      if (!g.is_array() || g.size() != 2)
        raise(Errc::ParseError, "promoted group must be [lo, hi]");
      tmpl.promoted_groups.emplace_back(g[0].get<int>(), g[1].get<int>());
    }
  validate_template(tmpl, schema);
  return tmpl;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::ParseError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(Errc::ParseError, path + ": " + e.what());
  }
  return j;
}

void save_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) raise(Errc::ParseError, "cannot write " + path);
  out << j.dump(2) << "\n";
}

Schema load_schema_file(const std::string& path) {
  return Schema::from_json(load_json_file(path));
}

TransactionTemplate load_template_file(const std::string& path, const Schema& schema) {
  return template_from_json(load_json_file(path), schema);
}

}  // namespace txmerge
