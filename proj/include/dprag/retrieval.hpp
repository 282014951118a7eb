#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dprag/core.hpp"
#include "dprag/embed.hpp"
#include "dprag/rng.hpp"

namespace dprag {

enum class UtilityKind { kTopK, kTopP };

// One constant piece of a threshold utility. Pieces are (lo, hi] except the
// first, which is [0, hi]; the measure-zero difference is irrelevant to the
// sampler. `selected` is the number of documents with score >= tau for any
// tau in the piece.
struct UtilityPiece {
  double lo = 0.0;
  double hi = 0.0;
  double utility = 0.0;
  std::size_t selected = 0;
};

// Utility of a similarity threshold tau in [0,1], piecewise constant between
// the sorted distinct document scores.
//
//   top-k:  U(tau) = -| #{i : tau <= s_i} - k |
//   top-p:  U(tau) = -| sum_{i : tau <= s_i} w(s_i) - p * sum_i w(s_i) |
//           w(s)   = exp(alpha * (s - s_max) / (s_max - s_min))
//
// When every score is identical the top-p contrast is undefined and w == 1
// is used instead (uniform_weights is set).
struct ThresholdUtility {
  UtilityKind kind = UtilityKind::kTopK;
  std::size_t k = 0;
  double p = 0.0;
  double alpha = 0.0;
  bool uniform_weights = false;

  // Parallel arrays; units is empty when built from bare scores.
  std::vector<std::string> units;
  std::vector<double> scores;
  std::vector<double> weights;  // top-p only

  std::vector<double> breakpoints;  // sorted distinct scores
  std::vector<UtilityPiece> pieces;  // zero-length pieces are dropped

  // Index of the piece containing tau (tau in [0,1]).
  std::size_t piece_index(double tau) const;
  double operator()(double tau) const { return pieces[piece_index(tau)].utility; }

  // Documents with tau <= s_i.
  std::vector<std::size_t> selected_indices(double tau) const;
  std::set<std::string> selected_units(double tau) const;
};

// Both throw Error{kEmptyScores} on an empty score set and
// Error{kInvalidArgument} on scores outside [0,1] or bad parameters.
ThresholdUtility build_topk_utility(const SimilarityScores& scores,
                                    std::size_t k);
ThresholdUtility build_topk_utility(std::span<const double> rescaled,
                                    std::size_t k);
ThresholdUtility build_topp_utility(const SimilarityScores& scores, double p,
                                    double alpha_retrieval);
ThresholdUtility build_topp_utility(std::span<const double> rescaled, double p,
                                    double alpha_retrieval);

// Builds the utility configured by params.mode.
ThresholdUtility build_threshold_utility(const SimilarityScores& scores,
                                         const PrivacyParams& params);

// Top-p contrast weights; sets *uniform when all scores coincide.
std::vector<double> contrast_weights(std::span<const double> rescaled,
                                     double alpha, bool* uniform = nullptr);

// Exponential-mechanism mass of every piece:
//   log_mass        = ln(hi - lo) + epsilon * utility / 2
//   log_probability = log_mass - logsumexp(all log_mass)
struct PieceMass {
  double lo = 0.0;
  double hi = 0.0;
  double utility = 0.0;
  double log_mass = 0.0;
  double log_probability = 0.0;
  double probability = 0.0;
};

std::vector<PieceMass> piece_mass_table(const ThresholdUtility& utility,
                                        double epsilon);

struct ThresholdDraw {
  double tau = 0.0;
  double epsilon_spent = 0.0;
  std::size_t piece = 0;
  std::set<std::string> selected;
  std::vector<std::size_t> selected_indices;
};

// Draws tau with density proportional to exp(epsilon * U(tau) / 2) on [0,1]:
// a piece is chosen with probability proportional to its mass, then tau is
// uniform inside it. This is exact; nothing is discretized. epsilon-DP for
// top-k, whose utility has sensitivity 1.
ThresholdDraw sample_threshold(const ThresholdUtility& utility, double epsilon,
                               RngState& rng);

}  // namespace dprag
