#include "ixbandit/query_store.hpp"

#include <algorithm>
#include <stdexcept>

namespace ixbandit {

int QueryStore::ingest(const std::vector<QueryInstance>& queries, std::int64_t round) {
  int fresh = 0;
  for (const auto& q : queries) {
    auto it = templates_.find(q.template_id);
    if (it == templates_.end()) {
      QueryTemplate tpl;
      tpl.template_id = q.template_id;
      tpl.kind = q.kind;
      tpl.predicates = q.predicates;
      tpl.payload = q.payload;
      tpl.rows_touched_mean = static_cast<double>(q.rows_touched);
      tpl.frequency = 1;
      tpl.first_seen = round;
      tpl.last_seen = round;
      templates_.emplace(q.template_id, std::move(tpl));
      ++fresh;
      continue;
    }

    QueryTemplate& tpl = it->second;
    if (tpl.kind != q.kind || tpl.predicates.size() != q.predicates.size())
      throw std::invalid_argument("query instance disagrees with its template shape");
    tpl.frequency += 1;
    tpl.last_seen = round;
    const double n = static_cast<double>(tpl.frequency);
    for (std::size_t i = 0; i < tpl.predicates.size(); ++i) {
      if (tpl.predicates[i].column != q.predicates[i].column)
        throw std::invalid_argument("query instance reorders template predicates");
      tpl.predicates[i].selectivity +=
          (q.predicates[i].selectivity - tpl.predicates[i].selectivity) / n;
    }
    tpl.rows_touched_mean += (static_cast<double>(q.rows_touched) - tpl.rows_touched_mean) / n;
  }
  return fresh;
}

std::vector<QueryTemplate> QueryStore::select_qoi(std::int64_t round, std::int64_t window) const {
  std::vector<QueryTemplate> out;
  for (const auto& [id, tpl] : templates_)
    if (tpl.last_seen >= round - window) out.push_back(tpl);
  std::stable_sort(out.begin(), out.end(), [](const QueryTemplate& a, const QueryTemplate& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.template_id < b.template_id;
  });
  return out;
}

const QueryTemplate* QueryStore::find(std::uint64_t template_id) const {
  auto it = templates_.find(template_id);
  return it == templates_.end() ? nullptr : &it->second;
}

}  // namespace ixbandit
