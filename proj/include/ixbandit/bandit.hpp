#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

// Linear contextual bandit core: ridge estimate theta = V^-1 b, optimistic
// scores theta'x + alpha * ||x||_{V^-1}, and the rank-one information
// updates. An arm observation may carry several (sub-context, sub-reward)
// pairs whose contexts occupy disjoint coordinates and sum to the full arm
// context; feeding the pairs separately is what sharpens the estimate, and
// with a single pair per arm this reduces to the plain combinatorial UCB
// update.
//
// All functions are state-in/state-out; nothing here owns hidden state.

namespace ixbandit {

struct HyperParams {
  double lambda = 8.0;    // ridge prior weight; keep >= the largest super arm you expect
  double delta = 0.1;     // confidence failure probability for the exploration schedule
  double s_bound = 1.0;   // norm bound on the unknown weight vector
  double r_subg = 1.0;    // sub-gaussian scale of per-observation reward noise
  int n_f = 1;            // reward components observed per arm
  std::optional<double> alpha_override;  // fixed exploration weight when set
  double forget_factor = 0.6;            // fraction of knowledge dropped on a full shift
};

inline void validate(const HyperParams& hp) {
  if (!(hp.lambda > 0.0)) throw std::invalid_argument("HyperParams: lambda must be > 0");
  if (!(hp.delta > 0.0 && hp.delta < 1.0))
    throw std::invalid_argument("HyperParams: delta must lie in (0, 1)");
  if (!(hp.s_bound >= 0.0)) throw std::invalid_argument("HyperParams: s_bound must be >= 0");
  if (!(hp.r_subg > 0.0)) throw std::invalid_argument("HyperParams: r_subg must be > 0");
  if (hp.n_f < 1) throw std::invalid_argument("HyperParams: n_f must be >= 1");
  if (hp.alpha_override && !(*hp.alpha_override >= 0.0))
    throw std::invalid_argument("HyperParams: alpha_override must be >= 0");
  if (!(hp.forget_factor >= 0.0 && hp.forget_factor <= 1.0))
    throw std::invalid_argument("HyperParams: forget_factor must lie in [0, 1]");
}

// The regret analysis needs the ridge weight to dominate the super-arm size.
inline void check_theory_preconditions(const HyperParams& hp, int max_super_arm) {
  validate(hp);
  if (hp.lambda + 1e-12 < static_cast<double>(max_super_arm))
    throw std::invalid_argument("HyperParams: lambda must be >= the maximum super-arm size");
}

template <typename Scalar = double>
struct BanditState {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Eigen::Index dim = 0;
  Scalar lambda = Scalar(1);  // prior scale, kept so forgetting can shrink toward it
  Matrix v_matrix;            // lambda * I plus the sum of observed outer products
  Vector b_vector;            // reward-weighted sum of observed contexts
  std::int64_t round = 0;       // completed update calls
  std::int64_t pull_count = 0;  // total arm observations folded in so far
};

template <typename Scalar = double>
struct ArmObservation {
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> sub_contexts;
  std::vector<Scalar> sub_rewards;
};

template <typename Scalar = double>
BanditState<Scalar> init(const HyperParams& hp, Eigen::Index dim) {
  validate(hp);
  if (dim < 1) throw std::invalid_argument("init: dimension must be >= 1");
  BanditState<Scalar> st;
  st.dim = dim;
  st.lambda = static_cast<Scalar>(hp.lambda);
  st.v_matrix = typename BanditState<Scalar>::Matrix(dim, dim);
  st.v_matrix.setZero();
  st.v_matrix.diagonal().setConstant(st.lambda);
  st.b_vector = BanditState<Scalar>::Vector::Zero(dim);
  return st;
}

namespace detail {

template <typename Scalar>
Eigen::LLT<typename BanditState<Scalar>::Matrix> factor(const BanditState<Scalar>& st) {
  Eigen::LLT<typename BanditState<Scalar>::Matrix> llt(st.v_matrix);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("bandit: information matrix lost positive definiteness");
  return llt;
}

}  // namespace detail

template <typename Scalar>
typename BanditState<Scalar>::Vector estimate_theta(const BanditState<Scalar>& st) {
  return detail::factor(st).solve(st.b_vector);
}

// Exploration weight for the round about to be played against k candidate
// arms. The analysis bounds the confidence width through det(V), which grows
// with the number of folded-in observations; pull_count + k is that count by
// the end of the round (and equals t*k when every round pulls all of a fixed
// k arms). Splitting an arm's reward into n_f parts scales the noise term by
// 1/sqrt(n_f), which is where the focused update earns its keep.
template <typename Scalar>
double alpha_schedule(const BanditState<Scalar>& st, const HyperParams& hp, std::int64_t k) {
  validate(hp);
  if (k < 1) throw std::invalid_argument("alpha_schedule: k must be >= 1");
  if (hp.alpha_override) return *hp.alpha_override;
  const double pulls = static_cast<double>(st.pull_count + k);
  const double d = static_cast<double>(st.dim);
  const double inner = (1.0 + pulls / hp.lambda) / hp.delta;
  return hp.r_subg / std::sqrt(static_cast<double>(hp.n_f)) * std::sqrt(d * std::log(inner)) +
         std::sqrt(hp.lambda) * hp.s_bound;
}

// Optimistic scores for a batch of candidate contexts, factoring V only once.
template <typename Scalar>
std::vector<Scalar> ucb_scores(const BanditState<Scalar>& st,
                               const std::vector<typename BanditState<Scalar>::Vector>& xs,
                               Scalar alpha) {
  if (!(alpha >= Scalar(0))) throw std::invalid_argument("ucb_scores: alpha must be >= 0");
  const auto llt = detail::factor(st);
  const typename BanditState<Scalar>::Vector theta = llt.solve(st.b_vector);
  std::vector<Scalar> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    if (x.size() != st.dim) throw std::invalid_argument("ucb_scores: context dimension mismatch");
    if (x.squaredNorm() > Scalar(1) + Scalar(1e-9))
      throw std::invalid_argument("ucb_scores: context norm exceeds 1");
    // L^-1 x has squared norm x' V^-1 x.
    const Scalar width = llt.matrixL().solve(x).norm();
    out.push_back(theta.dot(x) + alpha * width);
  }
  return out;
}

template <typename Scalar, typename Derived>
Scalar ucb_score(const BanditState<Scalar>& st, const Eigen::MatrixBase<Derived>& x,
                 Scalar alpha) {
  std::vector<typename BanditState<Scalar>::Vector> xs{x.eval()};
  return ucb_scores(st, xs, alpha)[0];
}

// Folds one round of observations into (V, b). Every sub-context of every
// observation contributes its own outer product; sub-contexts of one arm must
// occupy disjoint coordinates so that they sum to the arm's full context.
template <typename Scalar>
BanditState<Scalar> update(BanditState<Scalar> st,
                           const std::vector<ArmObservation<Scalar>>& observations) {
  for (const auto& obs : observations) {
    if (obs.sub_contexts.empty() || obs.sub_contexts.size() != obs.sub_rewards.size())
      throw std::invalid_argument("update: observation needs matching sub-context/sub-reward lists");
    for (const auto& x : obs.sub_contexts)
      if (x.size() != st.dim) throw std::invalid_argument("update: context dimension mismatch");
    for (const Scalar r : obs.sub_rewards)
      if (!std::isfinite(static_cast<double>(r)))
        throw std::invalid_argument("update: sub-reward must be finite");
    for (std::size_t f = 0; f + 1 < obs.sub_contexts.size(); ++f)
      for (std::size_t g = f + 1; g < obs.sub_contexts.size(); ++g)
        for (Eigen::Index c = 0; c < st.dim; ++c)
          if (obs.sub_contexts[f][c] != Scalar(0) && obs.sub_contexts[g][c] != Scalar(0))
            throw std::invalid_argument("update: sub-contexts must occupy disjoint coordinates");
  }
  for (const auto& obs : observations) {
    for (std::size_t f = 0; f < obs.sub_contexts.size(); ++f) {
      const auto& x = obs.sub_contexts[f];
      st.v_matrix.template selfadjointView<Eigen::Lower>().rankUpdate(x, Scalar(1));
      st.b_vector += obs.sub_rewards[f] * x;
    }
    st.pull_count += 1;
  }
  // rankUpdate touched only the lower triangle; restore full symmetric storage.
  st.v_matrix = st.v_matrix.template selfadjointView<Eigen::Lower>();
  st.round += 1;
  return st;
}

// Shrinks accumulated knowledge toward the prior. intensity 1 is a full
// reset, 0 a no-op; the round counter is untouched.
template <typename Scalar>
BanditState<Scalar> forget(BanditState<Scalar> st, double intensity) {
  if (!(intensity >= 0.0 && intensity <= 1.0))
    throw std::invalid_argument("forget: intensity must lie in [0, 1]");
  const Scalar keep = Scalar(1) - static_cast<Scalar>(intensity);
  st.v_matrix *= keep;
  st.v_matrix.diagonal().array() += st.lambda * (Scalar(1) - keep);
  st.b_vector *= keep;
  return st;
}

}  // namespace ixbandit
