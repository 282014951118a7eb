#include "dprag/accountant.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "dprag/error.hpp"

namespace dprag {

namespace {

void require_valid_epsilon(double epsilon, bool allow_zero) {
  const bool ok = std::isfinite(epsilon) && (epsilon > 0.0 ||
                                             (allow_zero && epsilon == 0.0));
  if (!ok) {
    throw Error(ErrorCode::kInvalidArgument,
                "privacy loss must be " +
                    std::string(allow_zero ? "non-negative" : "positive") +
                    ", got " + std::to_string(epsilon));
  }
}

std::int64_t unix_millis() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::string PrivacyReport::to_json() const {
  nlohmann::json events_json = nlohmann::json::array();
  for (const auto& e : events) {
    events_json.push_back({{"label", e.label}, {"epsilon", e.epsilon}});
  }
  nlohmann::json j = {{"epsilon_spent", epsilon_spent},
                      {"delta", delta},
                      {"events", std::move(events_json)}};
  return j.dump();
}

Accountant::Accountant(double budget, double delta_report)
    : budget_(budget), delta_(delta_report) {
  if (std::isnan(budget) || budget < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "budget must be >= 0");
  }
  if (!(delta_report >= 0.0 && delta_report < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "delta must lie in [0, 1)");
  }
}

void Accountant::spend(std::string label, double epsilon) {
  require_valid_epsilon(epsilon, /*allow_zero=*/false);
  std::lock_guard lock(mutex_);
  const double current = spent_locked();
  if (!(current + epsilon <= budget_)) {
    throw BudgetExhausted(epsilon, current, budget_);
  }
  append_ledger_locked(label, epsilon);
  events_.push_back({std::move(label), epsilon});
  total_.add(epsilon);
}

bool Accountant::try_spend(std::string label, double epsilon) {
  try {
    spend(std::move(label), epsilon);
    return true;
  } catch (const BudgetExhausted&) {
    return false;
  }
}

void Accountant::refund(std::string_view label, double epsilon) {
  require_valid_epsilon(epsilon, /*allow_zero=*/true);
  if (epsilon == 0.0) return;
  std::lock_guard lock(mutex_);
  refund_locked(label, epsilon);
  append_ledger_locked(label, -epsilon);
}

void Accountant::refund_locked(std::string_view label, double epsilon) {
  for (auto it = events_.rbegin(); it != events_.rend(); ++it) {
    if (it->label == label && it->epsilon >= epsilon) {
      it->epsilon -= epsilon;
      total_.add(-epsilon);
      return;
    }
  }
  throw Error(ErrorCode::kNoMatchingCharge,
              "no charge labelled '" + std::string(label) + "' covers a " +
                  "refund of " + std::to_string(epsilon));
}

double Accountant::spent() const {
  std::lock_guard lock(mutex_);
  return spent_locked();
}

double Accountant::remaining() const {
  std::lock_guard lock(mutex_);
  return budget_ - spent_locked();
}

bool Accountant::would_admit(double epsilon) const {
  std::lock_guard lock(mutex_);
  return spent_locked() + epsilon <= budget_;
}

PrivacyReport Accountant::report() const {
  std::lock_guard lock(mutex_);
  return PrivacyReport{spent_locked(), delta_, events_};
}

void Accountant::attach_ledger(const std::filesystem::path& path) {
  std::lock_guard lock(mutex_);
  ledger_.close();
  ledger_.clear();
  ledger_.open(path, std::ios::app);
  if (!ledger_) {
    throw Error(ErrorCode::kIo, "cannot open ledger " + path.string());
  }
}

void Accountant::append_ledger_locked(std::string_view label, double epsilon) {
  if (!ledger_.is_open()) return;
  nlohmann::json record = {
      {"ts", unix_millis()}, {"label", label}, {"epsilon", epsilon}};
  ledger_ << record.dump() << '\n';
  ledger_.flush();
  if (!ledger_) throw Error(ErrorCode::kIo, "ledger write failed");
}

void Accountant::restore(std::istream& ledger) {
  std::lock_guard lock(mutex_);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ledger, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
      const auto label = record.at("label").get<std::string>();
      const auto epsilon = record.at("epsilon").get<double>();
      if (!std::isfinite(epsilon) || epsilon == 0.0) {
        throw Error(ErrorCode::kFormat, "bad epsilon");
      }
      if (epsilon > 0.0) {
        events_.push_back({label, epsilon});
        total_.add(epsilon);
      } else {
        refund_locked(label, -epsilon);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, "ledger line " +
                                          std::to_string(line_no) + ": " +
                                          e.what());
    }
  }
}

void Accountant::restore(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read ledger " + path.string());
  restore(in);
}

}  // namespace dprag
