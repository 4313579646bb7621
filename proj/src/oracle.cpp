#include "ixbandit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace ixbandit::oracle {

namespace {

bool keys_are_prefix_of(const std::vector<std::uint32_t>& shorter,
                        const std::vector<std::uint32_t>& longer) {
  if (shorter.size() > longer.size()) return false;
  return std::equal(shorter.begin(), shorter.end(), longer.begin());
}

bool includes_subset(const std::set<std::uint32_t>& a, const std::set<std::uint32_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool redundant_against(const ScoredArm& candidate, const ScoredArm& picked) {
  if (keys_are_prefix_of(candidate.key_columns, picked.key_columns)) {
    if (candidate.key_columns.size() < picked.key_columns.size()) return true;
    // Equal key lists: redundant only when the includes add nothing.
    if (includes_subset(candidate.include_columns, picked.include_columns)) return true;
  }
  // An arm generated solely for one query dies once that query is covered.
  if (candidate.query_origins.size() == 1) {
    const std::uint64_t q = *candidate.query_origins.begin();
    const auto it = picked.is_covering.find(q);
    if (it != picked.is_covering.end() && it->second) return true;
  }
  return false;
}

void validate_arms(const std::vector<ScoredArm>& arms) {
  std::set<std::uint64_t> ids;
  for (const auto& a : arms) {
    if (!std::isfinite(a.score)) throw std::invalid_argument("oracle: arm score must be finite");
    if (!(a.memory_cost >= 0.0))
      throw std::invalid_argument("oracle: arm memory cost must be >= 0");
    if (!ids.insert(a.arm_id).second)
      throw std::invalid_argument("oracle: duplicate arm id");
  }
}

// Score per unit cost; the floor only keeps zero-cost arms finite (they rank
// ahead of everything else, ordered by score among themselves).
double density(const ScoredArm& a) { return a.score / std::max(a.memory_cost, 1e-12); }

// One greedy pass: repeatedly take the best remaining feasible arm under the
// given ranking, then drop whatever the filters rule out. A non-empty seed
// forces the first picks.
std::vector<ScoredArm> greedy_pass(std::vector<ScoredArm> remaining, double budget,
                                   const std::function<double(const ScoredArm&)>& rank,
                                   const std::vector<ScoredArm>& seed = {}) {
  std::vector<ScoredArm> selected;
  double residual = budget;
  for (const auto& s : seed) {
    if (s.memory_cost > residual) return selected;
    residual -= s.memory_cost;
    selected.push_back(s);
    std::erase_if(remaining, [&](const ScoredArm& a) { return a.arm_id == s.arm_id; });
  }
  remaining = filter_step(selected, std::move(remaining), residual);
  while (!remaining.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < remaining.size(); ++i) {
      const double ri = rank(remaining[i]), rb = rank(remaining[best]);
      if (ri > rb || (ri == rb && remaining[i].arm_id < remaining[best].arm_id)) best = i;
    }
    residual -= remaining[best].memory_cost;
    selected.push_back(std::move(remaining[best]));
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    remaining = filter_step(selected, std::move(remaining), residual);
  }
  return selected;
}

double total_score(const std::vector<ScoredArm>& arms) {
  double s = 0.0;
  for (const auto& a : arms) s += a.score;
  return s;
}

}  // namespace

std::vector<ScoredArm> filter_step(const std::vector<ScoredArm>& selected,
                                   std::vector<ScoredArm> remaining, double residual_budget) {
  std::erase_if(remaining, [&](const ScoredArm& cand) {
    if (cand.memory_cost > residual_budget) return true;
    for (const auto& picked : selected)
      if (redundant_against(cand, picked)) return true;
    return false;
  });
  return remaining;
}

std::set<std::uint64_t> greedy_select(const std::vector<ScoredArm>& arms, double budget) {
  if (!(budget >= 0.0)) throw std::invalid_argument("oracle: budget must be >= 0");
  validate_arms(arms);

  std::vector<ScoredArm> pool;
  pool.reserve(arms.size());
  for (const auto& a : arms)
    if (a.score >= 0.0) pool.push_back(a);

  const auto score_rank = [](const ScoredArm& a) { return a.score; };
  std::vector<std::vector<ScoredArm>> candidates;
  candidates.push_back(greedy_pass(pool, budget, score_rank));
  candidates.push_back(greedy_pass(pool, budget, density));

  // Seeded passes break the pattern where one chunky arm crowds out a better
  // combination: force each plausible first pick, then density-complete. On
  // small pools every arm gets a turn.
  std::vector<ScoredArm> seeds = pool;
  if (seeds.size() > 24) {
    std::sort(seeds.begin(), seeds.end(), [](const ScoredArm& a, const ScoredArm& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.arm_id < b.arm_id;
    });
    std::vector<ScoredArm> top(seeds.begin(), seeds.begin() + 12);
    std::sort(seeds.begin(), seeds.end(), [](const ScoredArm& a, const ScoredArm& b) {
      const double da = density(a), db = density(b);
      if (da != db) return da > db;
      return a.arm_id < b.arm_id;
    });
    for (auto it = seeds.begin(); it != seeds.end() && top.size() < 24; ++it)
      if (std::none_of(top.begin(), top.end(),
                       [&](const ScoredArm& t) { return t.arm_id == it->arm_id; }))
        top.push_back(*it);
    seeds = std::move(top);
  }
  for (const auto& s : seeds) {
    if (s.memory_cost > budget) continue;
    candidates.push_back(greedy_pass(pool, budget, density, {s}));
    candidates.push_back(greedy_pass(pool, budget, score_rank, {s}));
  }

  const std::vector<ScoredArm>* winner = &candidates.front();
  for (const auto& c : candidates)
    if (total_score(c) > total_score(*winner)) winner = &c;

  std::set<std::uint64_t> out;
  for (const auto& a : *winner) out.insert(a.arm_id);
  return out;
}

double verify_approximation(const std::vector<ScoredArm>& arms, double budget) {
  if (arms.size() > 20)
    throw std::invalid_argument("verify_approximation: instance too large to enumerate");
  validate_arms(arms);

  const auto chosen = greedy_select(arms, budget);
  double greedy_value = 0.0;
  for (const auto& a : arms)
    if (chosen.count(a.arm_id)) greedy_value += a.score;

  double best = 0.0;  // the empty configuration is always feasible
  const std::uint32_t n = static_cast<std::uint32_t>(arms.size());
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double cost = 0.0, value = 0.0;
    for (std::uint32_t i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        cost += arms[i].memory_cost;
        value += arms[i].score;
      }
    if (cost <= budget && value > best) best = value;
  }
  if (best <= 0.0) return 1.0;
  return greedy_value / best;
}

}  // namespace ixbandit::oracle
