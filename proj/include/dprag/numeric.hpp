#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dprag {

// ln(sum(exp(x))). Returns -inf for an empty span or all -inf entries.
double log_sum_exp(std::span<const double> values);

// x - log_sum_exp(x), elementwise.
std::vector<double> log_normalize(std::span<const double> log_weights);

// Index i such that the cumulative mass of exp(log_probs[0..i]) first
// exceeds u in [0,1). Zero-probability entries are never returned, even
// when rounding leaves the cumulative sum short of 1.
std::size_t sample_from_log_probs(std::span<const double> log_probs,
                                  double u);

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x);
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace dprag
