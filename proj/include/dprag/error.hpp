#pragma once

#include <stdexcept>
#include <string>

namespace dprag {

enum class ErrorCode {
  kInvalidArgument,
  kDuplicatePrivacyUnit,
  kEmptyRecord,
  kBudgetExhausted,
  kDimensionMismatch,
  kEmptyText,
  kTransport,
  kProviderUnavailable,
  kEmptyScores,
  kTemplateMalformed,
  kContextTooLong,
  kVocabMismatch,
  kNotNormalized,
  kUnknownTargetToken,
  kWrongStage,
  kNoMatchingCharge,
  kIo,
  kFormat,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class BudgetExhausted : public Error {
 public:
  BudgetExhausted(double requested, double spent, double budget);

  double requested() const noexcept { return requested_; }
  double spent() const noexcept { return spent_; }
  double budget() const noexcept { return budget_; }
  // Amount by which requested exceeds the remaining budget.
  double shortfall() const noexcept { return spent_ + requested_ - budget_; }

 private:
  double requested_;
  double spent_;
  double budget_;
};

class DuplicatePrivacyUnit : public Error {
 public:
  explicit DuplicatePrivacyUnit(std::string privacy_unit);

  const std::string& privacy_unit() const noexcept { return privacy_unit_; }

 private:
  std::string privacy_unit_;
};

}  // namespace dprag
