#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "dprag/numeric.hpp"

namespace dprag {

struct PrivacyEvent {
  std::string label;
  double epsilon = 0.0;

  bool operator==(const PrivacyEvent&) const = default;
};

struct PrivacyReport {
  double epsilon_spent = 0.0;
  double delta = 0.0;
  std::vector<PrivacyEvent> events;

  // Single-line JSON object: {"delta":..,"epsilon_spent":..,"events":[..]}.
  std::string to_json() const;
};

// Pure-epsilon accountant under basic composition: the total privacy loss
// is the sum of the recorded losses. delta is carried for reporting only;
// no mechanism here consumes it.
//
// spend and refund are serialized; report returns a consistent snapshot.
class Accountant {
 public:
  // budget may be +infinity to disable enforcement.
  Accountant(double budget, double delta_report);

  Accountant(const Accountant&) = delete;
  Accountant& operator=(const Accountant&) = delete;

  // Appends (label, epsilon) iff spent + epsilon <= budget, otherwise throws
  // BudgetExhausted and leaves the state unchanged. epsilon must be > 0.
  void spend(std::string label, double epsilon);

  // Tries to spend; returns false instead of throwing when over budget.
  bool try_spend(std::string label, double epsilon);

  // Reduces the most recent event carrying `label` whose remaining epsilon
  // covers the refund. Throws NoMatchingCharge when none does. A zero
  // refund is a no-op.
  void refund(std::string_view label, double epsilon);

  double spent() const;
  double budget() const noexcept { return budget_; }
  double delta() const noexcept { return delta_; }
  double remaining() const;
  bool would_admit(double epsilon) const;

  PrivacyReport report() const;

  // Appends every subsequent spend/refund to `path` as one JSON object per
  // line: {"ts":<unix ms>,"label":..,"epsilon":..}. Refunds are written with
  // a negative epsilon.
  void attach_ledger(const std::filesystem::path& path);

  // Replays a ledger written by attach_ledger. Historical charges are
  // applied without the budget check.
  void restore(std::istream& ledger);
  void restore(const std::filesystem::path& path);

 private:
  double spent_locked() const { return total_.value(); }
  void append_ledger_locked(std::string_view label, double epsilon);
  void refund_locked(std::string_view label, double epsilon);

  double budget_;
  double delta_;
  std::vector<PrivacyEvent> events_;
  CompensatedSum total_;
  std::ofstream ledger_;
  mutable std::mutex mutex_;
};

}  // namespace dprag
