#pragma once

#include "txmerge/engine.hpp"
#include "txmerge/rewriter.hpp"

namespace txmerge {

// One backend transaction plus an optional record of every statement it ran.
// Executors funnel all statement execution through run() so the same code
// path serves live execution, plan capture for inspection tooling, and the
// golden SQL emitters.
class ExecSession {
 public:
  ExecSession(Engine& engine, TxnId txn, bool capture = false)
      : engine_(engine), txn_(txn) {
    plan_.capture = capture;
  }

  Engine& engine() { return engine_; }
  TxnId txn() const { return txn_; }

  ResultSet run(const Statement& stmt) {
    record(stmt, std::nullopt, 0);
    return engine_.execute(txn_, stmt);
  }

  ResultSet run(const MergedSelect& sel) {
    record(sel.stmt, sel.dispatch, sel.added_key_columns);
    return engine_.execute(txn_, sel.stmt);
  }

  // Client-visible values derived outside any result set (allocated ids,
  // computed totals) keyed by invocation slot.
  void echo(int slot, const nlohmann::json& data) {
    if (plan_.capture) plan_.echoes[slot] = data;
  }

  const MergedPlan& plan() const { return plan_; }
  MergedPlan& plan() { return plan_; }

 private:
  void record(const Statement& stmt, std::optional<DispatchMap> dispatch,
              int added_cols) {
    if (!plan_.capture) return;
    plan_.statements.push_back({stmt, std::move(dispatch), added_cols});
  }

  Engine& engine_;
  TxnId txn_;
  MergedPlan plan_;
};

}  // namespace txmerge
