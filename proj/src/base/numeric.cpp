#include "dprag/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dprag {

double log_sum_exp(std::span<const double> values) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double max_value = kNegInf;
  for (double v : values) max_value = std::max(max_value, v);
  if (max_value == kNegInf) return kNegInf;
  if (std::isinf(max_value)) return max_value;
  double total = 0.0;
  for (double v : values) total += std::exp(v - max_value);
  return max_value + std::log(total);
}

std::vector<double> log_normalize(std::span<const double> log_weights) {
  const double lse = log_sum_exp(log_weights);
  std::vector<double> out(log_weights.begin(), log_weights.end());
  for (double& v : out) v -= lse;
  return out;
}

std::size_t sample_from_log_probs(std::span<const double> log_probs,
                                  double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    const double p = std::exp(log_probs[i]);
    if (p <= 0.0) continue;
    last_positive = i;
    cumulative += p;
    if (u < cumulative) return i;
  }
  return last_positive;
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

}  // namespace dprag
