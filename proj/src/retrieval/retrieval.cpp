#include "dprag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dprag/error.hpp"
#include "dprag/numeric.hpp"

namespace dprag {

namespace {

void check_scores(std::span<const double> rescaled) {
  if (rescaled.empty()) {
    throw Error(ErrorCode::kEmptyScores, "no similarity scores");
  }
  for (double s : rescaled) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "threshold scores must lie in [0,1], got " +
                      std::to_string(s));
    }
  }
}

// Shared piece construction. `value_of(selected_weight, selected_count)`
// turns the suffix sums of one piece into its utility.
template <class ValueFn>
void build_pieces(ThresholdUtility& u, ValueFn value_of) {
  const std::size_t n = u.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return u.scores[a] < u.scores[b]; });

  // Distinct breakpoints with suffix counts and weights (documents >= b).
  std::vector<std::size_t> count_ge;
  std::vector<double> weight_ge;
  u.breakpoints.clear();
  for (std::size_t idx : order) {
    const double s = u.scores[idx];
    if (u.breakpoints.empty() || s != u.breakpoints.back()) {
      u.breakpoints.push_back(s);
    }
  }
  const std::size_t m = u.breakpoints.size();
  count_ge.assign(m + 1, 0);
  weight_ge.assign(m + 1, 0.0);
  {
    std::vector<std::size_t> count_at(m, 0);
    std::vector<double> weight_at(m, 0.0);
    std::size_t b = 0;
    for (std::size_t idx : order) {
      while (u.scores[idx] != u.breakpoints[b]) ++b;
      ++count_at[b];
      weight_at[b] += u.weights.empty() ? 1.0 : u.weights[idx];
    }
    for (std::size_t j = m; j-- > 0;) {
      count_ge[j] = count_ge[j + 1] + count_at[j];
      weight_ge[j] = weight_ge[j + 1] + weight_at[j];
    }
  }

  u.pieces.clear();
  auto push = [&](double lo, double hi, std::size_t j) {
    if (!(hi > lo)) return;
    u.pieces.push_back({lo, hi, value_of(weight_ge[j], count_ge[j]), count_ge[j]});
  };
  push(0.0, u.breakpoints.front(), 0);
  for (std::size_t j = 1; j < m; ++j) {
    push(u.breakpoints[j - 1], u.breakpoints[j], j);
  }
  push(u.breakpoints.back(), 1.0, m);
}

}  // namespace

std::size_t ThresholdUtility::piece_index(double tau) const {
  // First piece whose upper end is >= tau.
  auto it = std::lower_bound(
      pieces.begin(), pieces.end(), tau,
      [](const UtilityPiece& piece, double t) { return piece.hi < t; });
  if (it == pieces.end()) return pieces.size() - 1;
  return static_cast<std::size_t>(it - pieces.begin());
}

std::vector<std::size_t> ThresholdUtility::selected_indices(double tau) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (tau <= scores[i]) out.push_back(i);
  }
  return out;
}

std::set<std::string> ThresholdUtility::selected_units(double tau) const {
  std::set<std::string> out;
  for (std::size_t i : selected_indices(tau)) {
    out.insert(units.empty() ? std::to_string(i) : units[i]);
  }
  return out;
}

std::vector<double> contrast_weights(std::span<const double> rescaled,
                                     double alpha, bool* uniform) {
  const auto [lo, hi] = std::minmax_element(rescaled.begin(), rescaled.end());
  const double s_min = *lo;
  const double s_max = *hi;
  const bool degenerate = !(s_max > s_min);
  if (uniform) *uniform = degenerate;
  std::vector<double> w(rescaled.size(), 1.0);
  if (degenerate) return w;
  const double range = s_max - s_min;
  for (std::size_t i = 0; i < rescaled.size(); ++i) {
    w[i] = std::exp(alpha * (rescaled[i] - s_max) / range);
  }
  return w;
}

ThresholdUtility build_topk_utility(std::span<const double> rescaled,
                                    std::size_t k) {
  check_scores(rescaled);
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  ThresholdUtility u;
  u.kind = UtilityKind::kTopK;
  u.k = k;
  u.scores.assign(rescaled.begin(), rescaled.end());
  const double target = static_cast<double>(k);
  build_pieces(u, [target](double, std::size_t count) {
    return -std::abs(static_cast<double>(count) - target);
  });
  return u;
}

ThresholdUtility build_topp_utility(std::span<const double> rescaled, double p,
                                    double alpha_retrieval) {
  check_scores(rescaled);
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "p must lie in (0,1]");
  }
  if (!(alpha_retrieval > 0.0) || !std::isfinite(alpha_retrieval)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha_retrieval must be > 0");
  }
  ThresholdUtility u;
  u.kind = UtilityKind::kTopP;
  u.p = p;
  u.alpha = alpha_retrieval;
  u.scores.assign(rescaled.begin(), rescaled.end());
  u.weights = contrast_weights(rescaled, alpha_retrieval, &u.uniform_weights);
  CompensatedSum total;
  for (double w : u.weights) total.add(w);
  const double target = p * total.value();
  build_pieces(u, [target](double weight, std::size_t) {
    return -std::abs(weight - target);
  });
  return u;
}

namespace {

template <class Builder>
ThresholdUtility from_scores(const SimilarityScores& scores, Builder build) {
  std::vector<std::string> units;
  std::vector<double> values;
  units.reserve(scores.rescaled.size());
  values.reserve(scores.rescaled.size());
  for (const auto& [pu, s] : scores.rescaled) {
    units.push_back(pu);
    values.push_back(s);
  }
  ThresholdUtility u = build(std::span<const double>(values));
  u.units = std::move(units);
  return u;
}

}  // namespace

ThresholdUtility build_topk_utility(const SimilarityScores& scores,
                                    std::size_t k) {
  return from_scores(scores, [k](std::span<const double> v) {
    return build_topk_utility(v, k);
  });
}

ThresholdUtility build_topp_utility(const SimilarityScores& scores, double p,
                                    double alpha_retrieval) {
  return from_scores(scores, [&](std::span<const double> v) {
    return build_topp_utility(v, p, alpha_retrieval);
  });
}

ThresholdUtility build_threshold_utility(const SimilarityScores& scores,
                                         const PrivacyParams& params) {
  if (const auto* k = std::get_if<TopK>(&params.mode)) {
    return build_topk_utility(scores, k->k);
  }
  return build_topp_utility(scores, std::get<TopP>(params.mode).p,
                            params.alpha_retrieval);
}

std::vector<PieceMass> piece_mass_table(const ThresholdUtility& utility,
                                        double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  }
  std::vector<PieceMass> table;
  std::vector<double> log_masses;
  table.reserve(utility.pieces.size());
  log_masses.reserve(utility.pieces.size());
  for (const auto& piece : utility.pieces) {
    PieceMass m;
    m.lo = piece.lo;
    m.hi = piece.hi;
    m.utility = piece.utility;
    m.log_mass = std::log(piece.hi - piece.lo) + epsilon * piece.utility / 2.0;
    log_masses.push_back(m.log_mass);
    table.push_back(m);
  }
  const double lse = log_sum_exp(log_masses);
  for (auto& m : table) {
    m.log_probability = m.log_mass - lse;
    m.probability = std::exp(m.log_probability);
  }
  return table;
}

ThresholdDraw sample_threshold(const ThresholdUtility& utility, double epsilon,
                               RngState& rng) {
  const auto table = piece_mass_table(utility, epsilon);
  std::vector<double> log_probs;
  log_probs.reserve(table.size());
  for (const auto& m : table) log_probs.push_back(m.log_probability);

  ThresholdDraw draw;
  draw.piece = sample_from_log_probs(log_probs, rng.uniform());
  const auto& piece = utility.pieces[draw.piece];
  // tau in (lo, hi]: the closed upper end keeps tau inside its piece.
  draw.tau = piece.hi - (piece.hi - piece.lo) * rng.uniform();
  draw.epsilon_spent = epsilon;
  draw.selected_indices = utility.selected_indices(draw.tau);
  for (std::size_t i : draw.selected_indices) {
    draw.selected.insert(utility.units.empty() ? std::to_string(i)
                                               : utility.units[i]);
  }
  return draw;
}

}  // namespace dprag
