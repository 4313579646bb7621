#include "ixbandit/schema.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace ixbandit {
namespace {

template <typename Doc>
std::vector<std::uint32_t> tables_of(const Doc& doc, const Schema& schema) {
  std::set<std::uint32_t> seen;
  for (const auto& p : doc.predicates) seen.insert(column_table(schema, p.column));
  for (std::uint32_t c : doc.payload) seen.insert(column_table(schema, c));
  return {seen.begin(), seen.end()};
}

}  // namespace

std::uint32_t column_count(const Schema& schema) {
  std::size_t n = 0;
  for (const auto& t : schema.tables) n += t.columns.size();
  return static_cast<std::uint32_t>(n);
}

std::uint32_t column_table(const Schema& schema, std::uint32_t global_id) {
  std::uint32_t base = 0;
  for (std::uint32_t t = 0; t < schema.tables.size(); ++t) {
    const auto width = static_cast<std::uint32_t>(schema.tables[t].columns.size());
    if (global_id < base + width) return t;
    base += width;
  }
  throw std::out_of_range("column id " + std::to_string(global_id) + " exceeds schema");
}

const Column& column_at(const Schema& schema, std::uint32_t global_id) {
  std::uint32_t base = 0;
  for (const auto& table : schema.tables) {
    const auto width = static_cast<std::uint32_t>(table.columns.size());
    if (global_id < base + width) return table.columns[global_id - base];
    base += width;
  }
  throw std::out_of_range("column id " + std::to_string(global_id) + " exceeds schema");
}

std::uint32_t global_column_id(const Schema& schema, std::uint32_t table, std::uint32_t local) {
  if (table >= schema.tables.size()) throw std::out_of_range("table index exceeds schema");
  if (local >= schema.tables[table].columns.size())
    throw std::out_of_range("column index exceeds table " + schema.tables[table].name);
  std::uint32_t base = 0;
  for (std::uint32_t t = 0; t < table; ++t)
    base += static_cast<std::uint32_t>(schema.tables[t].columns.size());
  return base + local;
}

double database_size_bytes(const Schema& schema) {
  double total = 0.0;
  for (const auto& t : schema.tables)
    total += static_cast<double>(t.row_count) * static_cast<double>(t.row_width_bytes);
  return total;
}

void validate(const Schema& schema) {
  if (schema.tables.empty()) throw std::invalid_argument("schema has no tables");
  std::set<std::string> table_names;
  for (const auto& t : schema.tables) {
    if (t.name.empty()) throw std::invalid_argument("table with empty name");
    if (!table_names.insert(t.name).second)
      throw std::invalid_argument("duplicate table name " + t.name);
    if (t.columns.empty()) throw std::invalid_argument("table " + t.name + " has no columns");
    if (t.row_count == 0) throw std::invalid_argument("table " + t.name + " has no rows");
    std::set<std::string> col_names;
    std::uint32_t payload_width = 0;
    for (const auto& c : t.columns) {
      if (c.name.empty()) throw std::invalid_argument("column with empty name in " + t.name);
      if (!col_names.insert(c.name).second)
        throw std::invalid_argument("duplicate column " + c.name + " in " + t.name);
      if (c.width_bytes == 0) throw std::invalid_argument("zero-width column " + c.name);
      if (c.distinct_values == 0) throw std::invalid_argument("column " + c.name + " has no values");
      payload_width += c.width_bytes;
    }
    if (t.row_width_bytes < payload_width)
      throw std::invalid_argument("row width of " + t.name + " is narrower than its columns");
  }
}

void validate(const QueryTemplate& tpl, const Schema& schema) {
  const std::uint32_t n = column_count(schema);
  std::set<std::uint32_t> pred_cols;
  for (const auto& p : tpl.predicates) {
    if (p.column >= n) throw std::invalid_argument("predicate references unknown column");
    if (!(p.selectivity > 0.0 && p.selectivity <= 1.0))
      throw std::invalid_argument("selectivity outside (0, 1]");
    if (!pred_cols.insert(p.column).second)
      throw std::invalid_argument("duplicate predicate column in template");
  }
  for (std::uint32_t c : tpl.payload) {
    if (c >= n) throw std::invalid_argument("payload references unknown column");
    if (pred_cols.count(c)) throw std::invalid_argument("payload column repeats a predicate column");
  }
  if (tpl.kind == QueryKind::select && tpl.predicates.empty())
    throw std::invalid_argument("select template has no predicate columns");
  if (tpl.kind != QueryKind::select) {
    if (referenced_tables(tpl, schema).size() != 1)
      throw std::invalid_argument("write template must reference exactly one table");
    if (tpl.rows_touched_mean < 1.0)
      throw std::invalid_argument("write template touches fewer than one row");
  }
  if (tpl.kind == QueryKind::insert && !tpl.predicates.empty())
    throw std::invalid_argument("insert template carries predicates");
}

std::vector<std::uint32_t> referenced_tables(const QueryTemplate& tpl, const Schema& schema) {
  return tables_of(tpl, schema);
}

std::vector<std::uint32_t> referenced_tables(const QueryInstance& q, const Schema& schema) {
  return tables_of(q, schema);
}

}  // namespace ixbandit
