#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "ixbandit/arms.hpp"
#include "ixbandit/context.hpp"
#include "ixbandit/query_store.hpp"
#include "ixbandit/rng.hpp"
#include "ixbandit/schema.hpp"

using namespace ixbandit;

namespace {

// Single wide table; global column ids are simply 0..3.
Schema fixture_schema() {
  Schema s;
  Table t;
  t.name = "facts";
  t.row_count = 1000;
  t.row_width_bytes = 32;
  t.columns = {{"c0", 8, 100}, {"c1", 8, 100}, {"c2", 8, 100}, {"c3", 8, 100}};
  s.tables = {t};
  return s;
}

QueryTemplate select_template(std::uint64_t id, std::vector<Predicate> preds,
                              std::vector<std::uint32_t> payload = {}) {
  QueryTemplate tpl;
  tpl.template_id = id;
  tpl.kind = QueryKind::select;
  tpl.predicates = std::move(preds);
  tpl.payload = std::move(payload);
  return tpl;
}

// Canonical form for comparing generated arm definitions.
using ArmDef = std::pair<std::vector<std::uint32_t>, std::set<std::uint32_t>>;

std::set<ArmDef> definitions(const std::vector<IndexCandidate>& arms) {
  std::set<ArmDef> defs;
  for (const auto& a : arms) defs.insert({a.key_columns, a.include_columns});
  return defs;
}

const IndexCandidate& arm_with(const std::vector<IndexCandidate>& arms,
                               const std::vector<std::uint32_t>& keys,
                               const std::set<std::uint32_t>& includes = {}) {
  for (const auto& a : arms)
    if (a.key_columns == keys && a.include_columns == includes) return a;
  REQUIRE(false);
  return arms.front();
}

}  // namespace

TEST_CASE("global column ids map tables and columns") {
  Schema s = fixture_schema();
  Table small;
  small.name = "dims";
  small.row_count = 10;
  small.row_width_bytes = 16;
  small.columns = {{"d0", 8, 10}, {"d1", 8, 10}};
  s.tables.push_back(small);
  validate(s);

  CHECK(column_count(s) == 6);
  CHECK(global_column_id(s, 0, 3) == 3);
  CHECK(global_column_id(s, 1, 0) == 4);
  CHECK(column_table(s, 3) == 0);
  CHECK(column_table(s, 4) == 1);
  CHECK(column_at(s, 5).name == "d1");
  CHECK(database_size_bytes(s) == doctest::Approx(1000.0 * 32 + 10.0 * 16));
  CHECK_THROWS_AS((void)column_table(s, 6), std::out_of_range);
  CHECK_THROWS_AS((void)global_column_id(s, 2, 0), std::out_of_range);
}

TEST_CASE("schema validation rejects malformed inputs") {
  CHECK_THROWS_AS(validate(Schema{}), std::invalid_argument);

  Schema dup = fixture_schema();
  dup.tables.push_back(dup.tables[0]);
  CHECK_THROWS_AS(validate(dup), std::invalid_argument);

  Schema empty_rows = fixture_schema();
  empty_rows.tables[0].row_count = 0;
  CHECK_THROWS_AS(validate(empty_rows), std::invalid_argument);

  Schema narrow = fixture_schema();
  narrow.tables[0].row_width_bytes = 8;
  CHECK_THROWS_AS(validate(narrow), std::invalid_argument);

  Schema dup_col = fixture_schema();
  dup_col.tables[0].columns[1].name = "c0";
  CHECK_THROWS_AS(validate(dup_col), std::invalid_argument);
}

TEST_CASE("template validation enforces ranges and shapes") {
  const Schema s = fixture_schema();

  CHECK_NOTHROW(validate(select_template(1, {{2, 0.5}}), s));
  CHECK_THROWS_AS(validate(select_template(1, {}), s), std::invalid_argument);
  CHECK_THROWS_AS(validate(select_template(1, {{9, 0.5}}), s), std::invalid_argument);
  CHECK_THROWS_AS(validate(select_template(1, {{2, 0.0}}), s), std::invalid_argument);
  CHECK_THROWS_AS(validate(select_template(1, {{2, 1.5}}), s), std::invalid_argument);
  CHECK_THROWS_AS(validate(select_template(1, {{2, 0.5}, {2, 0.2}}), s), std::invalid_argument);
  CHECK_THROWS_AS(validate(select_template(1, {{2, 0.5}}, {2}), s), std::invalid_argument);

  QueryTemplate ins;
  ins.template_id = 7;
  ins.kind = QueryKind::insert;
  ins.payload = {0, 1};
  ins.rows_touched_mean = 1.0;
  CHECK_NOTHROW(validate(ins, s));
  ins.predicates = {{2, 0.5}};
  CHECK_THROWS_AS(validate(ins, s), std::invalid_argument);
}

TEST_CASE("six arms for the two-predicate template with payload") {
  const Schema s = fixture_schema();
  const auto tpl = select_template(1, {{2, 0.1}, {3, 0.2}}, {1});
  const auto arms = generate_arms({tpl}, s);

  CHECK(arms.size() == 6);
  const std::set<ArmDef> expected = {
      {{2}, {}}, {{3}, {}}, {{2, 3}, {}}, {{3, 2}, {}}, {{2, 3}, {1}}, {{3, 2}, {1}},
  };
  CHECK(definitions(arms) == expected);

  // Only the include variants can answer the query without the heap.
  CHECK(arm_with(arms, {2, 3}, {1}).covering_for.at(1));
  CHECK(arm_with(arms, {3, 2}, {1}).covering_for.at(1));
  CHECK_FALSE(arm_with(arms, {2, 3}).covering_for.at(1));
  CHECK_FALSE(arm_with(arms, {2}).covering_for.at(1));

  for (const auto& a : arms) {
    CHECK(a.query_origins == std::set<std::uint64_t>{1});
    CHECK(a.table == 0);
    CHECK(a.arm_id == arm_identity(a.table, a.key_columns, a.include_columns));
    CHECK_FALSE(a.materialised);
  }
}

TEST_CASE("single predicate and no payload yields one arm") {
  const Schema s = fixture_schema();
  const auto arms = generate_arms({select_template(4, {{0, 0.3}})}, s);
  REQUIRE(arms.size() == 1);
  CHECK(arms[0].key_columns == std::vector<std::uint32_t>{0});
  CHECK(arms[0].include_columns.empty());
  // Keys span every referenced column, so the plain arm itself covers.
  CHECK(arms[0].covering_for.at(4));
}

TEST_CASE("templates sharing a predicate set merge into one arm list") {
  const Schema s = fixture_schema();
  const auto t1 = select_template(1, {{2, 0.1}, {3, 0.2}});
  const auto t2 = select_template(2, {{2, 0.4}, {3, 0.3}});
  const auto arms = generate_arms({t1, t2}, s);

  // Hand enumeration: (c2), (c3), (c2,c3), (c3,c2); no payload variants.
  CHECK(arms.size() == 4);
  const std::set<ArmDef> expected = {{{2}, {}}, {{3}, {}}, {{2, 3}, {}}, {{3, 2}, {}}};
  CHECK(definitions(arms) == expected);
  for (const auto& a : arms) {
    CHECK(a.query_origins == std::set<std::uint64_t>{1, 2});
    CHECK(a.covering_for.size() == 2);
  }
  // Both templates reference predicate columns only, so the two-column arms
  // cover both sponsors.
  CHECK(arm_with(arms, {2, 3}).covering_for.at(1));
  CHECK(arm_with(arms, {2, 3}).covering_for.at(2));
  CHECK_FALSE(arm_with(arms, {2}).covering_for.at(1));
}

TEST_CASE("arm ids are stable across rounds and definitions are order sensitive") {
  const Schema s = fixture_schema();
  const auto tpl = select_template(1, {{2, 0.1}, {3, 0.2}}, {1});

  const auto first = generate_arms({tpl}, s);
  const auto second = generate_arms({tpl}, s);
  std::set<std::uint64_t> ids1, ids2;
  for (const auto& a : first) ids1.insert(a.arm_id);
  for (const auto& a : second) ids2.insert(a.arm_id);
  CHECK(ids1 == ids2);
  CHECK(ids1.size() == 6);

  CHECK(arm_identity(0, {2, 3}, {}) != arm_identity(0, {3, 2}, {}));
  CHECK(arm_identity(0, {2, 3}, {}) != arm_identity(0, {2, 3}, {1}));
  CHECK(arm_identity(0, {2}, {}) != arm_identity(1, {2}, {}));
}

TEST_CASE("arm counts respect the permutation bound on fixtures") {
  const Schema s = fixture_schema();

  // Three predicates with payload, full width reachable: every permutation
  // width 1..3 plus an include variant for each full-width permutation.
  const auto t3 = select_template(1, {{0, 0.1}, {2, 0.2}, {3, 0.3}}, {1});
  const auto arms3 = generate_arms({t3}, s, {3, 64});
  const int perms_w1 = 3, perms_w2 = 6, perms_w3 = 6;
  CHECK(arms3.size() == static_cast<std::size_t>(perms_w1 + perms_w2 + 2 * perms_w3));
  CHECK(arms3.size() <= 2u * (perms_w1 + perms_w2 + perms_w3));

  // Four predicates, width capped at 2: no full-width permutations, so no
  // include variants at all.
  const auto t4 = select_template(2, {{0, 0.1}, {1, 0.2}, {2, 0.3}, {3, 0.4}}, {});
  const auto arms4 = generate_arms({t4}, s, {2, 64});
  CHECK(arms4.size() == 4u + 12u);
}

TEST_CASE("per-template cap keeps the most selective arms") {
  const Schema s = fixture_schema();
  // c2 is far more selective than c3, so ranking puts it first.
  const auto tpl = select_template(1, {{3, 0.5}, {2, 0.01}});
  const auto arms = generate_arms({tpl}, s, {2, 3});
  CHECK(arms.size() == 3);
  const std::set<ArmDef> expected = {{{2}, {}}, {{3}, {}}, {{2, 3}, {}}};
  CHECK(definitions(arms) == expected);
}

TEST_CASE("non-select templates yield no arms") {
  const Schema s = fixture_schema();
  QueryTemplate upd;
  upd.template_id = 9;
  upd.kind = QueryKind::update;
  upd.predicates = {{2, 0.1}};
  upd.payload = {1};
  upd.rows_touched_mean = 5.0;
  CHECK(generate_arms({upd}, s).empty());
}

TEST_CASE("key-position encoding matches the worked example") {
  const Schema s = fixture_schema();
  const auto tpl = select_template(1, {{2, 0.1}, {3, 0.2}}, {1});
  const auto arms = generate_arms({tpl}, s);
  const ContextLayout layout = make_layout(s);
  PickHistory picks(layout.usage_window);

  const auto x = build_context(arm_with(arms, {2, 3}), {tpl}, s, picks, 1, layout);
  const double scale = layout.scale();
  CHECK(x[2] * scale == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(x[3] * scale == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(x[0] == 0.0);
  CHECK(x[1] == 0.0);

  // Reversed key order swaps the magnitudes.
  const auto y = build_context(arm_with(arms, {3, 2}), {tpl}, s, picks, 1, layout);
  CHECK(y[2] * scale == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(y[3] * scale == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("payload and out-of-workload columns carry no key signal") {
  const Schema s = fixture_schema();
  const auto tpl = select_template(1, {{2, 0.1}, {3, 0.2}}, {1});
  const auto arms = generate_arms({tpl}, s);
  const ContextLayout layout = make_layout(s);
  PickHistory picks(layout.usage_window);

  // Include columns never reach part 1 even though the arm carries c1.
  const auto x = build_context(arm_with(arms, {2, 3}, {1}), {tpl}, s, picks, 1, layout);
  CHECK(x[1] == 0.0);

  // A leftover arm keyed on columns the current workload no longer filters
  // on loses its part-1 signal entirely.
  const auto narrow = select_template(5, {{2, 0.1}});
  const auto z = build_context(arm_with(arms, {2, 3}), {narrow}, s, picks, 1, layout);
  CHECK(z[2] * layout.scale() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(z[3] == 0.0);
}

TEST_CASE("materialised arms zero the size slot") {
  const Schema s = fixture_schema();
  const auto tpl = select_template(1, {{2, 0.1}, {3, 0.2}}, {1});
  const auto arms = generate_arms({tpl}, s);
  const ContextLayout layout = make_layout(s);
  PickHistory picks(layout.usage_window);

  IndexCandidate arm = arm_with(arms, {2, 3}, {1});
  // Entry width 8 (locator) + 3 columns of 8 = 32 bytes over 1000 rows, plus
  // the 1.2 planning slack; the heap is 32 bytes over the same rows, so the
  // raw ratio 1.2 clamps to 1.
  CHECK(actual_index_size(s, 0, {2, 3}, {1}) == doctest::Approx(32000.0));
  CHECK(arm.est_size_bytes == doctest::Approx(38400.0));
  const auto before = build_context(arm, {tpl}, s, picks, 1, layout);
  CHECK(before[layout.size_slot()] * layout.scale() == doctest::Approx(1.0));

  arm.materialised = true;
  const auto after = build_context(arm, {tpl}, s, picks, 1, layout);
  CHECK(after[layout.size_slot()] == 0.0);

  IndexCandidate narrow = arm_with(arms, {2});
  CHECK(narrow.est_size_bytes == doctest::Approx(19200.0));
  const auto half = build_context(narrow, {tpl}, s, picks, 1, layout);
  CHECK(half[layout.size_slot()] * layout.scale() == doctest::Approx(0.6));
}

TEST_CASE("covering slot reflects any sponsoring template") {
  const Schema s = fixture_schema();
  const auto tpl = select_template(1, {{2, 0.1}, {3, 0.2}}, {1});
  const auto arms = generate_arms({tpl}, s);
  const ContextLayout layout = make_layout(s);
  PickHistory picks(layout.usage_window);

  const auto cov = build_context(arm_with(arms, {2, 3}, {1}), {tpl}, s, picks, 1, layout);
  CHECK(cov[layout.covering_slot()] * layout.scale() == doctest::Approx(1.0));
  const auto plain = build_context(arm_with(arms, {2, 3}), {tpl}, s, picks, 1, layout);
  CHECK(plain[layout.covering_slot()] == 0.0);
}

TEST_CASE("usage slot counts optimiser picks inside the window") {
  const Schema s = fixture_schema();
  const auto tpl = select_template(1, {{2, 0.1}, {3, 0.2}});
  const auto arms = generate_arms({tpl}, s);
  const auto& arm = arm_with(arms, {2, 3});
  const ContextLayout layout = make_layout(s, 10);
  PickHistory picks(layout.usage_window);

  // Used in rounds 1..12; at round 13 the window covers rounds 3..12.
  for (std::int64_t r = 1; r <= 12; ++r) picks.record(r, {arm.arm_id});
  CHECK(picks.count(arm.arm_id, 13) == 10);
  CHECK(picks.count(arm.arm_id, 20) == 3);
  CHECK(picks.count(arm.arm_id, 23) == 0);
  CHECK(picks.count(9999, 13) == 0);

  const auto x = build_context(arm, {tpl}, s, picks, 13, layout);
  CHECK(x[layout.usage_slot()] * layout.scale() == doctest::Approx(10.0));
}

TEST_CASE("context construction rejects foreign inputs") {
  const Schema s = fixture_schema();
  const auto tpl = select_template(1, {{2, 0.1}});
  const auto arms = generate_arms({tpl}, s);
  const ContextLayout layout = make_layout(s);
  PickHistory picks(layout.usage_window);

  IndexCandidate alien = arms[0];
  alien.key_columns = {99};
  CHECK_THROWS_AS((void)build_context(alien, {tpl}, s, picks, 1, layout), std::invalid_argument);

  PickHistory mismatched(7);
  CHECK_THROWS_AS((void)build_context(arms[0], {tpl}, s, picks, 1, ContextLayout{2, 10}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)build_context(arms[0], {tpl}, s, mismatched, 1, layout),
                  std::invalid_argument);
}

TEST_CASE("every context stays inside the unit ball") {
  const Schema s = fixture_schema();
  const ContextLayout layout = make_layout(s, 10);
  Rng rng(0x10031);

  const auto tpl = select_template(1, {{0, 0.05}, {2, 0.1}, {3, 0.2}}, {1});
  const auto arms = generate_arms({tpl}, s, {3, 64});
  REQUIRE(!arms.empty());

  PickHistory picks(layout.usage_window);
  for (std::int64_t r = 1; r <= 30; ++r) {
    std::set<std::uint64_t> used;
    for (const auto& a : arms)
      if (rng.uniform01() < 0.7) used.insert(a.arm_id);
    picks.record(r, used);
    for (const auto& a : arms) {
      IndexCandidate probe = a;
      probe.materialised = rng.uniform01() < 0.5;
      const auto x = build_context(probe, {tpl}, s, picks, r + 1, layout);
      CHECK(x.squaredNorm() <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("ingest adds new templates and updates seen ones") {
  QueryStore store;
  QueryInstance q;
  q.template_id = 42;
  q.kind = QueryKind::select;
  q.predicates = {{2, 0.2}};

  CHECK(store.ingest({q}, 5) == 1);
  const QueryTemplate* tpl = store.find(42);
  REQUIRE(tpl != nullptr);
  CHECK(tpl->frequency == 1);
  CHECK(tpl->first_seen == 5);
  CHECK(tpl->last_seen == 5);
  CHECK(tpl->predicates[0].selectivity == doctest::Approx(0.2));

  q.predicates[0].selectivity = 0.4;
  CHECK(store.ingest({q}, 9) == 0);
  tpl = store.find(42);
  CHECK(tpl->frequency == 2);
  CHECK(tpl->first_seen == 5);
  CHECK(tpl->last_seen == 9);
  CHECK(tpl->predicates[0].selectivity == doctest::Approx(0.3));

  QueryInstance bad = q;
  bad.kind = QueryKind::update;
  CHECK_THROWS_AS((void)store.ingest({bad}, 10), std::invalid_argument);
}

TEST_CASE("mixed batch of three new and two repeats grows the store by three") {
  QueryStore store;
  auto instance = [](std::uint64_t id) {
    QueryInstance q;
    q.template_id = id;
    q.kind = QueryKind::select;
    q.predicates = {{0, 0.1}};
    return q;
  };

  store.ingest({instance(1), instance(2)}, 1);
  CHECK(store.size() == 2);

  const int fresh = store.ingest(
      {instance(3), instance(1), instance(4), instance(2), instance(5)}, 2);
  CHECK(fresh == 3);
  CHECK(store.size() == 5);
  CHECK(store.find(1)->frequency == 2);
  CHECK(store.find(3)->frequency == 1);
}

TEST_CASE("qoi selection windows by last_seen and orders by frequency") {
  QueryStore store;
  auto instance = [](std::uint64_t id) {
    QueryInstance q;
    q.template_id = id;
    q.kind = QueryKind::select;
    q.predicates = {{0, 0.1}};
    return q;
  };

  store.ingest({instance(10)}, 3);
  for (int i = 0; i < 5; ++i) store.ingest({instance(20)}, 25);
  store.ingest({instance(30)}, 28);
  store.ingest({instance(30)}, 29);

  // Template 10 was last seen at round 3; at round 30 a window of 20 reaches
  // back to round 10 and excludes it.
  auto qoi = store.select_qoi(30, 20);
  REQUIRE(qoi.size() == 2);
  CHECK(qoi[0].template_id == 20);
  CHECK(qoi[0].frequency == 5);
  CHECK(qoi[1].template_id == 30);

  // An effectively unbounded window returns everything.
  qoi = store.select_qoi(30, 1'000'000);
  CHECK(qoi.size() == 3);

  // Frequency ties fall back to template id.
  QueryStore tie;
  tie.ingest({instance(7), instance(3)}, 1);
  auto both = tie.select_qoi(1, 5);
  REQUIRE(both.size() == 2);
  CHECK(both[0].template_id == 3);
  CHECK(both[1].template_id == 7);
}
