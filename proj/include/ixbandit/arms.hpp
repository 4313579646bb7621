#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "ixbandit/schema.hpp"

// Candidate secondary indexes derived from the current queries of interest.
// Arm identity is a stable hash of the physical definition (table, ordered
// key list, include set), so the same index proposed by different templates
// collapses into one arm whose origin set records every sponsor.
namespace ixbandit {

struct IndexCandidate {
  std::uint64_t arm_id = 0;
  std::uint32_t table = 0;
  std::vector<std::uint32_t> key_columns;   // global ids, order significant
  std::set<std::uint32_t> include_columns;  // global ids
  double est_size_bytes = 0.0;
  bool materialised = false;
  std::set<std::uint64_t> query_origins;            // sponsoring template ids
  std::map<std::uint64_t, bool> covering_for;       // template id -> index-only capable
};

std::uint64_t arm_identity(std::uint32_t table, const std::vector<std::uint32_t>& key_columns,
                           const std::set<std::uint32_t>& include_columns);

// Exact built size: one entry per row carrying keys, includes and a row
// locator.
double actual_index_size(const Schema& schema, std::uint32_t table,
                         const std::vector<std::uint32_t>& key_columns,
                         const std::set<std::uint32_t>& include_columns);

// Pre-build planning estimate. Deliberately pessimistic (a fixed slack over
// the exact size), so that correcting the estimate after the first build can
// only shrink a configuration's accounted footprint.
double estimate_index_size(const Schema& schema, std::uint32_t table,
                           const std::vector<std::uint32_t>& key_columns,
                           const std::set<std::uint32_t>& include_columns);

struct ArmGenOptions {
  int max_key_width = 3;
  int per_template_cap = 64;
};

// Enumerates, per select template and per referenced table, all ordered
// permutations of predicate-column subsets up to max_key_width. When a
// permutation uses the full predicate set of the table and the template has
// payload columns there, a second variant adds them as includes and is marked
// covering. Enumeration ranks predicate columns most-selective-first and the
// per-template cap truncates in that order. Returned ascending by arm_id.
std::vector<IndexCandidate> generate_arms(const std::vector<QueryTemplate>& qoi,
                                          const Schema& schema, const ArmGenOptions& opts = {});

}  // namespace ixbandit
