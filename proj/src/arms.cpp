#include "ixbandit/arms.hpp"

#include <algorithm>
#include <stdexcept>

namespace ixbandit {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;
constexpr std::uint32_t kRowLocatorBytes = 8;

void fnv_mix(std::uint64_t& h, std::uint64_t value) {
  for (int byte = 0; byte < 8; ++byte) {
    h ^= (value >> (8 * byte)) & 0xffu;
    h *= kFnvPrime;
  }
}

// Columns of a template that live on the given table, split by role.
struct TableSlice {
  std::vector<Predicate> predicates;
  std::vector<std::uint32_t> payload;
};

std::map<std::uint32_t, TableSlice> slice_by_table(const QueryTemplate& tpl,
                                                   const Schema& schema) {
  std::map<std::uint32_t, TableSlice> slices;
  for (const auto& p : tpl.predicates) slices[column_table(schema, p.column)].predicates.push_back(p);
  for (std::uint32_t c : tpl.payload) slices[column_table(schema, c)].payload.push_back(c);
  return slices;
}

}  // namespace

std::uint64_t arm_identity(std::uint32_t table, const std::vector<std::uint32_t>& key_columns,
                           const std::set<std::uint32_t>& include_columns) {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, table);
  fnv_mix(h, key_columns.size());
  for (std::uint32_t c : key_columns) fnv_mix(h, c);
  fnv_mix(h, include_columns.size());
  for (std::uint32_t c : include_columns) fnv_mix(h, c);
  return h;
}

double actual_index_size(const Schema& schema, std::uint32_t table,
                         const std::vector<std::uint32_t>& key_columns,
                         const std::set<std::uint32_t>& include_columns) {
  if (table >= schema.tables.size()) throw std::out_of_range("table index exceeds schema");
  double entry_width = kRowLocatorBytes;
  for (std::uint32_t c : key_columns) entry_width += column_at(schema, c).width_bytes;
  for (std::uint32_t c : include_columns) entry_width += column_at(schema, c).width_bytes;
  return static_cast<double>(schema.tables[table].row_count) * entry_width;
}

double estimate_index_size(const Schema& schema, std::uint32_t table,
                           const std::vector<std::uint32_t>& key_columns,
                           const std::set<std::uint32_t>& include_columns) {
  constexpr double kEstimateSlack = 1.2;  // page overhead and fill-factor guess
  return kEstimateSlack * actual_index_size(schema, table, key_columns, include_columns);
}

std::vector<IndexCandidate> generate_arms(const std::vector<QueryTemplate>& qoi,
                                          const Schema& schema, const ArmGenOptions& opts) {
  if (opts.max_key_width < 1) throw std::invalid_argument("max_key_width below 1");
  if (opts.per_template_cap < 1) throw std::invalid_argument("per_template_cap below 1");

  std::map<std::uint64_t, IndexCandidate> pool;

  for (const auto& tpl : qoi) {
    validate(tpl, schema);
    if (tpl.kind != QueryKind::select) continue;

    // A single-table template is index-only answerable when keys plus
    // includes span every referenced column.
    const auto tables = referenced_tables(tpl, schema);
    const bool single_table = tables.size() == 1;

    int emitted = 0;
    auto emit = [&](std::uint32_t table, const std::vector<std::uint32_t>& keys,
                    const std::set<std::uint32_t>& includes) {
      if (emitted >= opts.per_template_cap) return;
      ++emitted;
      const std::uint64_t id = arm_identity(table, keys, includes);
      auto [it, fresh] = pool.try_emplace(id);
      IndexCandidate& arm = it->second;
      if (fresh) {
        arm.arm_id = id;
        arm.table = table;
        arm.key_columns = keys;
        arm.include_columns = includes;
        arm.est_size_bytes = estimate_index_size(schema, table, keys, includes);
      }
      arm.query_origins.insert(tpl.template_id);
      bool covers = single_table;
      if (covers) {
        std::set<std::uint32_t> present(keys.begin(), keys.end());
        present.insert(includes.begin(), includes.end());
        for (const auto& p : tpl.predicates) covers = covers && present.count(p.column) > 0;
        for (std::uint32_t c : tpl.payload) covers = covers && present.count(c) > 0;
      }
      // Another template may already mark this arm covering; keep the flag
      // per sponsor.
      arm.covering_for[tpl.template_id] = covers;
    };

    for (const auto& [table, slice] : slice_by_table(tpl, schema)) {
      if (slice.predicates.empty()) continue;  // payload-only table, nothing to seek on

      // Most selective column first; ties resolved by column id.
      std::vector<Predicate> ranked = slice.predicates;
      std::sort(ranked.begin(), ranked.end(), [](const Predicate& a, const Predicate& b) {
        if (a.selectivity != b.selectivity) return a.selectivity < b.selectivity;
        return a.column < b.column;
      });
      const int m = static_cast<int>(ranked.size());
      const int max_width = std::min(opts.max_key_width, m);

      std::set<std::uint32_t> payload_includes(slice.payload.begin(), slice.payload.end());

      for (int width = 1; width <= max_width && emitted < opts.per_template_cap; ++width) {
        // Subsets as sorted position vectors, visited lexicographically so
        // the cap keeps the best-ranked columns.
        std::vector<int> subset(width);
        for (int i = 0; i < width; ++i) subset[i] = i;
        while (true) {
          std::vector<int> perm = subset;
          do {
            std::vector<std::uint32_t> keys(width);
            for (int i = 0; i < width; ++i) keys[i] = ranked[perm[i]].column;
            emit(table, keys, {});
            if (width == m && !payload_includes.empty()) {
              std::set<std::uint32_t> inc = payload_includes;
              for (std::uint32_t k : keys) inc.erase(k);
              if (!inc.empty()) emit(table, keys, inc);
            }
          } while (std::next_permutation(perm.begin(), perm.end()) &&
                   emitted < opts.per_template_cap);
          if (emitted >= opts.per_template_cap) break;
          // Advance to the next combination of positions.
          int i = width - 1;
          while (i >= 0 && subset[i] == m - width + i) --i;
          if (i < 0) break;
          ++subset[i];
          for (int j = i + 1; j < width; ++j) subset[j] = subset[j - 1] + 1;
        }
      }
    }
  }

  std::vector<IndexCandidate> arms;
  arms.reserve(pool.size());
  for (auto& [id, arm] : pool) arms.push_back(std::move(arm));
  return arms;
}

}  // namespace ixbandit
