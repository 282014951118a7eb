#include "dprag/error.hpp"

#include <sstream>

namespace dprag {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDuplicatePrivacyUnit: return "DuplicatePrivacyUnit";
    case ErrorCode::kEmptyRecord: return "EmptyRecord";
    case ErrorCode::kBudgetExhausted: return "BudgetExhausted";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kTransport: return "Transport";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kTemplateMalformed: return "TemplateMalformed";
    case ErrorCode::kContextTooLong: return "ContextTooLong";
    case ErrorCode::kVocabMismatch: return "VocabMismatch";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kUnknownTargetToken: return "UnknownTargetToken";
    case ErrorCode::kWrongStage: return "WrongStage";
    case ErrorCode::kNoMatchingCharge: return "NoMatchingCharge";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kFormat: return "Format";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

namespace {

std::string budget_message(double requested, double spent, double budget) {
  std::ostringstream os;
  os.precision(17);
  os << "requested " << requested << " with " << spent << " of " << budget
     << " spent (short by " << (spent + requested - budget) << ")";
  return os.str();
}

}  // namespace

BudgetExhausted::BudgetExhausted(double requested, double spent, double budget)
    : Error(ErrorCode::kBudgetExhausted,
            budget_message(requested, spent, budget)),
      requested_(requested),
      spent_(spent),
      budget_(budget) {}

DuplicatePrivacyUnit::DuplicatePrivacyUnit(std::string privacy_unit)
    : Error(ErrorCode::kDuplicatePrivacyUnit,
            "privacy unit '" + privacy_unit + "' appears more than once"),
      privacy_unit_(std::move(privacy_unit)) {}

}  // namespace dprag
