#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ixbandit/schema.hpp"

// Rolling workload statistics. The store keeps one template per template_id
// with running-average selectivities and freshness bookkeeping; the tuner
// asks it each round for the queries of interest.
namespace ixbandit {

class QueryStore {
 public:
  // Folds a batch of observed queries into the store. Returns the number of
  // templates seen for the first time.
  int ingest(const std::vector<QueryInstance>& queries, std::int64_t round);

  // Templates with last_seen >= round - window, ordered by frequency
  // descending, ties broken by template_id ascending.
  std::vector<QueryTemplate> select_qoi(std::int64_t round, std::int64_t window) const;

  std::size_t size() const { return templates_.size(); }
  const QueryTemplate* find(std::uint64_t template_id) const;
  void clear() { templates_.clear(); }

 private:
  std::map<std::uint64_t, QueryTemplate> templates_;
};

}  // namespace ixbandit
