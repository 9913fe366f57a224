#include <string>
#include <vector>

#include "doctest.h"
#include "txmerge/analyzer.hpp"
#include "txmerge/errors.hpp"
#include "txmerge/workload.hpp"

using namespace txmerge;
using namespace txmerge::workload;

namespace {

std::vector<std::pair<int, int>> ranges_of(const MergeGroupReport& r) {
  std::vector<std::pair<int, int>> out;
  for (const MergeGroup& g : r.groups) out.emplace_back(g.lo, g.hi);
  return out;
}

bool has_witness(const MergeGroup& g, int a, int b, const std::string& col) {
  for (const ConflictWitness& w : g.witnesses)
    if (w.stmt_a == a && w.stmt_b == b && w.column == col) return true;
  return false;
}

const MergeGroup& group_at(const MergeGroupReport& r, int lo) {
  for (const MergeGroup& g : r.groups)
    if (g.lo == lo) return g;
  FAIL("no group starting at ", lo);
  return r.groups.front();
}

}  // namespace

TEST_CASE("order entry template splits into the expected groups") {
  TransactionTemplate tmpl = neworder_template();
  MergeGroupReport r = analyze_template(tmpl);

  std::vector<std::pair<int, int>> expect = {
      {1, 1}, {2, 2}, {3, 4}, {5, 5}, {6, 6}, {7, 7}, {8, 10}};
  CHECK(ranges_of(r) == expect);

  // The two sequential groups exist for concrete single-column reasons.
  const MergeGroup& seq_a = group_at(r, 3);
  CHECK(seq_a.sequential());
  CHECK(has_witness(seq_a, 3, 4, "d_next_o_id"));

  const MergeGroup& seq_b = group_at(r, 8);
  CHECK(seq_b.sequential());
  CHECK(has_witness(seq_b, 8, 10, "s_quantity"));
  // The order line insert in the middle of the range conflicts with
  // neither neighbor; it is swept in only by contiguity.
  for (const ConflictWitness& w : seq_b.witnesses) {
    CHECK(w.stmt_a != 9);
    CHECK(w.stmt_b != 9);
  }

  // Both sequential groups carry the operator promotion flag.
  CHECK(seq_a.promoted);
  CHECK(seq_b.promoted);
  CHECK_FALSE(group_at(r, 1).promoted);
}

TEST_CASE("payment template splits into the expected groups") {
  MergeGroupReport r = analyze_template(payment_template());

  std::vector<std::pair<int, int>> expect = {
      {1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 8}, {9, 9}};
  CHECK(ranges_of(r) == expect);

  const MergeGroup& seq = group_at(r, 6);
  CHECK(seq.hi == 8);
  CHECK(seq.promoted);
  CHECK(has_witness(seq, 6, 7, "c_data"));
  CHECK(has_witness(seq, 7, 8, "c_balance"));
  // The credit-check read (statement 5) must stay out: it reads only the
  // customer's identity columns plus credit class, none of which the
  // updates touch.
  for (const ConflictWitness& w : seq.witnesses) CHECK(w.stmt_a >= 6);
}

TEST_CASE("order total template splits into the expected groups") {
  MergeGroupReport r = analyze_template(order_total_template());

  std::vector<std::pair<int, int>> expect = {{1, 1}, {2, 2}, {3, 4}};
  CHECK(ranges_of(r) == expect);
  CHECK(has_witness(group_at(r, 3), 3, 4, "updated_at"));
  CHECK(group_at(r, 3).promoted);
}

TEST_CASE("conflict exceptions: inserts vs reads and distinct keys") {
  TransactionTemplate tmpl = neworder_template();

  // Statement 6 inserts into new_order; statement 5 inserts into oorder.
  // Different tables, no conflict; and an insert never conflicts with an
  // existing-row query on the same table.
  CHECK_FALSE(conflict_between(tmpl.stmt(5), tmpl.stmt(6)));

  // Stock reads (8) and stock updates (10) for distinct item keys would
  // conflict pairwise across instances if they were not marked distinct.
  Statement a = tmpl.stmt(8);
  Statement b = tmpl.stmt(10);
  REQUIRE(conflict_between(a, b));
  a.distinct_key = true;
  b.distinct_key = true;
  CHECK_FALSE(conflict_between(a, b));
}

TEST_CASE("interleaving proof accepts the derived reports") {
  for (const TransactionTemplate& tmpl :
       {neworder_template(), payment_template(), order_total_template()}) {
    MergeGroupReport r = analyze_template(tmpl);
    std::string note = verify_interleaving(r, tmpl);
    CHECK(note.find("conflict-equivalent") != std::string::npos);
    CHECK(note.find(tmpl.name) != std::string::npos);
  }
}

TEST_CASE("interleaving proof rejects a corrupted report") {
  TransactionTemplate tmpl = neworder_template();
  MergeGroupReport r = analyze_template(tmpl);

  // Split the final sequential group {8..10} into {8,9} and {10}.  The
  // stock update of instance 1 would then run after instance 2's stock
  // read, reversing a conflicting pair.
  MergeGroupReport split = r;
  for (size_t i = 0; i < split.groups.size(); ++i) {
    if (split.groups[i].lo == 8) {
      split.groups[i].hi = 9;
      MergeGroup tail;
      tail.lo = tail.hi = 10;
      split.groups.insert(split.groups.begin() + i + 1, tail);
      break;
    }
  }
  CHECK_THROWS_WITH_AS(verify_interleaving(split, tmpl),
                       doctest::Contains("reorders conflicting statements"),
                       Error);

  // A report that does not cover the statement list is structurally bad.
  MergeGroupReport missing = r;
  missing.groups.pop_back();
  CHECK_THROWS_AS(verify_interleaving(missing, tmpl), Error);
}

TEST_CASE("report json labels sequential groups") {
  nlohmann::json j = analyze_template(payment_template()).to_json();
  CHECK(j["transaction"] == "payment");
  int sequential = 0;
  for (const auto& g : j["groups"])
    if (g["class"] == "sequential_group") ++sequential;
  CHECK(sequential == 1);
}
