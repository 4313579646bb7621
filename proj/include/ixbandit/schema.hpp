#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Relational metadata and the query model the tuner works against. Columns
// are addressed by a global id (declaration order across tables) so that key
// lists, predicates and context slots all speak the same language.
namespace ixbandit {

struct Column {
  std::string name;
  std::uint32_t width_bytes = 8;
  std::uint64_t distinct_values = 1000;
};

struct Table {
  std::string name;
  std::uint64_t row_count = 0;
  std::uint32_t row_width_bytes = 0;
  std::vector<Column> columns;
};

struct Schema {
  std::vector<Table> tables;
};

enum class QueryKind { select, insert, update, delete_op };

struct Predicate {
  std::uint32_t column = 0;   // global column id
  double selectivity = 0.1;   // fraction of rows matched, in (0, 1]
};

struct QueryTemplate {
  std::uint64_t template_id = 0;
  QueryKind kind = QueryKind::select;
  std::vector<Predicate> predicates;    // averaged selectivities once stored
  std::vector<std::uint32_t> payload;   // referenced non-predicate columns
  double rows_touched_mean = 1.0;       // write templates only
  // Query-store statistics, maintained by ingest.
  std::uint64_t frequency = 0;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
};

struct QueryInstance {
  std::uint64_t template_id = 0;
  QueryKind kind = QueryKind::select;
  std::vector<Predicate> predicates;    // instance selectivities
  std::vector<std::uint32_t> payload;
  std::uint64_t rows_touched = 0;       // write instances only
  std::uint32_t constant_rank = 1;      // which predicate constant was drawn (1 = hottest)
};

std::uint32_t column_count(const Schema& schema);

// Table index owning the given global column id.
std::uint32_t column_table(const Schema& schema, std::uint32_t global_id);
const Column& column_at(const Schema& schema, std::uint32_t global_id);
std::uint32_t global_column_id(const Schema& schema, std::uint32_t table, std::uint32_t local);

// Base data volume (heap rows only, no indexes).
double database_size_bytes(const Schema& schema);

void validate(const Schema& schema);

// Checks column references and selectivity ranges against the schema; write
// templates must touch a single table.
void validate(const QueryTemplate& tpl, const Schema& schema);

// Tables referenced by the template's predicates and payload, ascending.
std::vector<std::uint32_t> referenced_tables(const QueryTemplate& tpl, const Schema& schema);
std::vector<std::uint32_t> referenced_tables(const QueryInstance& q, const Schema& schema);

}  // namespace ixbandit
