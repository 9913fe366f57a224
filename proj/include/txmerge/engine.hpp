#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "txmerge/result.hpp"
#include "txmerge/schema.hpp"
#include "txmerge/statement.hpp"

namespace txmerge {

using TxnId = uint64_t;

struct EngineOptions {
  std::chrono::milliseconds lock_timeout{200};
};

struct EngineStats {
  uint64_t statements_executed = 0;
  uint64_t rows_locked = 0;
  uint64_t lock_waits = 0;
  uint64_t aborts = 0;
};

struct Snapshot {
  uint64_t digest = 0;
  std::string dump;

  std::string hex() const;
  bool operator==(const Snapshot& o) const { return digest == o.digest && dump == o.dump; }
};

// In-memory reference storage engine: serializable isolation via strict
// two-phase locking on row keys.  A transaction acquires shared locks for
// reads and exclusive locks for writes (and for SELECT ... FOR UPDATE),
// holds every lock until commit or abort, and rolls back through an undo
// log.  Deadlocks resolve by lock-wait timeout: the waiter aborts itself
// and surfaces Retryable, so a client retry always finds a clean state.
//
// Statements must use the structured model; predicates over the full
// primary key take the point-lookup path, anything else scans.  Scans lock
// only the rows they matched, so serializability holds on key-targeted
// workloads (which is all this artifact ships); there is no predicate
// locking.
class Engine {
 public:
  explicit Engine(Schema schema, EngineOptions opts = {});

  const Schema& schema() const { return schema_; }

  // Direct load outside any transaction; row cells in schema column order.
  void load_row(const std::string& table, std::vector<Value> row);

  TxnId begin();
  void commit(TxnId txn);
  void abort(TxnId txn);

  // Binds (when args are given) and runs one statement inside txn.
  // Throws Retryable after self-aborting on lock timeout or injected fault;
  // ConstraintViolation rolls back only the failed statement and leaves the
  // transaction active.
  ResultSet execute(TxnId txn, const Statement& stmt,
                    const std::vector<Value>& args = {});

  // Whole-database digest; requires quiescence (no active transactions).
  Snapshot snapshot() const;

  std::unique_ptr<Engine> clone() const;

  EngineStats stats() const;

  // The next transaction to begin aborts itself right after completing its
  // k-th statement (1-based), surfacing Retryable to the caller.
  void arm_fault(int after_statements);

  // Test/diagnostic helpers.
  std::optional<std::vector<Value>> row(const std::string& table,
                                        const KeyTuple& key) const;
  size_t table_size(const std::string& table) const;
  size_t active_transactions() const;

 private:
  struct TableData {
    int def_index = 0;
    std::map<KeyTuple, std::vector<Value>> rows;
  };

  using LockKey = std::pair<int, KeyTuple>;  // (table index, row key)

  struct LockState {
    std::set<TxnId> shared;
    TxnId exclusive = 0;
  };

  struct UndoRecord {
    int table = 0;
    KeyTuple key;
    bool existed = false;
    std::vector<Value> old_row;
  };

  struct TxnState {
    std::map<LockKey, bool> locks;  // -> holds exclusive
    std::vector<UndoRecord> undo;
    std::set<LockKey> undo_logged;
    int statements_run = 0;
    std::optional<int> fault_after;
  };

  int table_index(const std::string& name) const;
  const TableDef& table_def(int idx) const { return schema_.tables()[static_cast<size_t>(idx)]; }

  TxnState& require_txn(TxnId txn);
  bool try_acquire(TxnId txn, TxnState& st, const LockKey& key, bool exclusive);
  void release_all(TxnId txn, TxnState& st);
  void abort_locked(TxnId txn, TxnState& st);
  void log_undo(TxnState& st, int table, const KeyTuple& key);

  std::vector<KeyTuple> match_rows(const TableData& t, const TableDef& def,
                                   const std::optional<Predicate>& pred) const;
  ResultSet apply_locked(TxnState& st, const Statement& stmt,
                         std::vector<KeyTuple> matched);

  Schema schema_;
  EngineOptions opts_;
  std::vector<TableData> tables_;

  mutable std::mutex mtx_;
  std::condition_variable cv_;
  std::map<TxnId, TxnState> txns_;
  std::map<LockKey, LockState> locks_;
  TxnId next_txn_ = 1;
  std::optional<int> armed_fault_;
  EngineStats stats_;
};

}  // namespace txmerge
