#include "txmerge/analyzer.hpp"

#include <algorithm>
#include <sstream>

namespace txmerge {

std::optional<ConflictWitness> conflict_between(const Statement& a,
                                                const Statement& b) {
  if (a.table != b.table) return std::nullopt;
  // An Insert creates rows no existing-row query can see under the
  // template's key discipline; only two Inserts into the same table can
  // collide (same key space).
  bool a_ins = a.kind == StatementKind::Insert;
  bool b_ins = b.kind == StatementKind::Insert;
  if (a_ins != b_ins) return std::nullopt;
  if (a.distinct_key && b.distinct_key) return std::nullopt;

  auto intersect_hit = [&](const std::set<std::string>& w,
                           const Statement& other) -> std::optional<std::string> {
    for (const std::string& c : w)
      if (other.reads.count(c) || other.writes.count(c)) return c;
    return std::nullopt;
  };
  std::optional<std::string> col = intersect_hit(a.writes, b);
  if (!col) col = intersect_hit(b.writes, a);
  if (!col) return std::nullopt;
  ConflictWitness w;
  w.table = a.table;
  w.column = *col;
  return w;
}

MergeGroupReport analyze_template(const TransactionTemplate& tmpl) {
  const int n = tmpl.size();
  std::vector<ConflictWitness> pairs;
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      std::optional<ConflictWitness> w = conflict_between(tmpl.stmt(i), tmpl.stmt(j));
      if (w) {
        w->stmt_a = i;
        w->stmt_b = j;
        pairs.push_back(*w);
      }
    }
  }

  // Each conflicting pair (i, j) forces statements i..j into one group;
  // overlapping forced ranges fuse until a fixpoint.
  std::vector<std::pair<int, int>> ranges;
  for (const ConflictWitness& w : pairs) ranges.emplace_back(w.stmt_a, w.stmt_b);
  std::sort(ranges.begin(), ranges.end());
  std::vector<std::pair<int, int>> fused;
  for (const auto& r : ranges) {
    if (!fused.empty() && r.first <= fused.back().second)
      fused.back().second = std::max(fused.back().second, r.second);
    else
      fused.push_back(r);
  }

  MergeGroupReport report;
  report.transaction = tmpl.name;
  int next = 1;
  size_t ri = 0;
  while (next <= n) {
    if (ri < fused.size() && fused[ri].first == next) {
      MergeGroup g;
      g.lo = fused[ri].first;
      g.hi = fused[ri].second;
      for (const ConflictWitness& w : pairs)
        if (w.stmt_a >= g.lo && w.stmt_b <= g.hi) g.witnesses.push_back(w);
      report.groups.push_back(std::move(g));
      next = fused[ri].second + 1;
      ++ri;
    } else {
      MergeGroup g;
      g.lo = g.hi = next;
      report.groups.push_back(std::move(g));
      ++next;
    }
  }

  for (MergeGroup& g : report.groups)
    for (const auto& [lo, hi] : tmpl.promoted_groups)
      if (g.lo == lo && g.hi == hi) g.promoted = true;

  for (int i = 1; i <= n; ++i)
    if (tmpl.stmt(i).kind == StatementKind::Delete)
      report.conservative_deletes.push_back(i);

  return report;
}

nlohmann::json MergeGroupReport::to_json() const {
  nlohmann::json gj = nlohmann::json::array();
  for (const MergeGroup& g : groups) {
    nlohmann::json w = nlohmann::json::array();
    for (const ConflictWitness& c : g.witnesses)
      w.push_back({{"stmts", nlohmann::json::array({c.stmt_a, c.stmt_b})},
                   {"table", c.table},
                   {"column", c.column}});
    gj.push_back({{"range", nlohmann::json::array({g.lo, g.hi})},
                  {"class", g.sequential() ? "sequential_group" : "mergeable_singleton"},
                  {"promoted", g.promoted},
                  {"witnesses", std::move(w)}});
  }
  nlohmann::json out{{"transaction", transaction}, {"groups", std::move(gj)}};
  if (!conservative_deletes.empty()) {
    out["notes"] = nlohmann::json::array();
    for (int s : conservative_deletes)
      out["notes"].push_back("statement " + std::to_string(s) +
                             " is a delete treated as writing every column");
  }
  return out;
}

std::string verify_interleaving(const MergeGroupReport& report,
                                const TransactionTemplate& tmpl) {
  const int n = tmpl.size();

  // The report must partition 1..n into contiguous ranges.
  int expect = 1;
  for (const MergeGroup& g : report.groups) {
    if (g.lo != expect || g.hi < g.lo || g.hi > n)
      raise(Errc::InternalError,
            "group report does not partition the statement list");
    expect = g.hi + 1;
  }
  if (expect != n + 1)
    raise(Errc::InternalError, "group report does not cover every statement");

  // Group-interleaved schedule of two instances: for each group in order,
  // instance 1 runs its statements, then instance 2 runs the same range.
  std::vector<std::pair<int, int>> schedule;  // (instance, statement)
  for (const MergeGroup& g : report.groups) {
    for (int s = g.lo; s <= g.hi; ++s) schedule.emplace_back(1, s);
    for (int s = g.lo; s <= g.hi; ++s) schedule.emplace_back(2, s);
  }
  std::vector<int> pos1(static_cast<size_t>(n) + 1), pos2(static_cast<size_t>(n) + 1);
  for (size_t i = 0; i < schedule.size(); ++i) {
    auto [inst, s] = schedule[i];
    (inst == 1 ? pos1 : pos2)[static_cast<size_t>(s)] = static_cast<int>(i);
  }

  // Serial schedule runs all of instance 1 before instance 2, so every
  // cross-instance conflict must keep direction instance1 -> instance2.
  int checked = 0;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      if (!conflict_between(tmpl.stmt(i), tmpl.stmt(j))) continue;
      ++checked;
      if (pos1[static_cast<size_t>(i)] > pos2[static_cast<size_t>(j)])
        raise(Errc::InternalError,
              "interleaving reorders conflicting statements " + std::to_string(i) +
                  " (instance 1) and " + std::to_string(j) +
                  " (instance 2) in " + report.transaction);
    }
  }

  std::ostringstream note;
  note << "transaction " << report.transaction << ": group-interleaved schedule over "
       << report.groups.size() << " group(s) keeps all " << checked
       << " cross-instance conflicting pair(s) in serial order"
       << " (instance 1 before instance 2); the interleaving is therefore"
       << " conflict-equivalent to serial execution";
  return note.str();
}

}  // namespace txmerge
