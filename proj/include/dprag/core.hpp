#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace dprag {

class Accountant;

// Index into the active language model's vocabulary.
struct Token {
  std::uint32_t id = 0;

  auto operator<=>(const Token&) const = default;
};

struct Document {
  std::string doc_id;
  std::string privacy_unit;
  std::string text;
  // Empty when not yet embedded.
  std::vector<double> embedding;

  bool operator==(const Document&) const = default;
};

// One raw input line: (doc_id, privacy_unit, text).
struct Record {
  std::string doc_id;
  std::string privacy_unit;
  std::string text;
};

enum class DuplicatePolicy { kReject, kConcatenate };

DuplicatePolicy parse_duplicate_policy(const std::string& name);
const char* to_string(DuplicatePolicy policy);

// Documents keyed by privacy unit: exactly one document per unit. Immutable
// once shared; set_embedding is for the single ingestion writer.
class Corpus {
 public:
  Corpus() = default;

  const std::map<std::string, Document>& documents() const noexcept {
    return documents_;
  }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }
  const Document& at(const std::string& privacy_unit) const;

  // 0 until the first embedding is attached.
  std::size_t embedding_dim() const noexcept { return embedding_dim_; }
  bool fully_embedded() const;

  // Throws DimensionMismatch when the dimension differs from earlier ones.
  void set_embedding(const std::string& privacy_unit,
                     std::vector<double> embedding);

  // Inserts a finished document; throws DuplicatePrivacyUnit if taken.
  void insert(Document document);

 private:
  std::map<std::string, Document> documents_;
  std::size_t embedding_dim_ = 0;
};

// Groups records by privacy unit. Under kConcatenate the texts of one unit
// are joined in input order with "\n\n"; the first record's doc_id is kept.
// Throws DuplicatePrivacyUnit (kReject) or Error{kEmptyRecord}.
Corpus ingest(const std::vector<Record>& records, DuplicatePolicy policy);

// Newline-delimited JSON objects with string fields doc_id, privacy_unit
// and text. Blank lines are skipped.
std::vector<Record> read_records(std::istream& in);

struct TopK {
  std::size_t k = 10;
};

struct TopP {
  double p = 0.5;
};

using SelectionMode = std::variant<TopK, TopP>;

struct PrivacyParams {
  double epsilon_retrieval = 0.5;
  double epsilon_per_token = 0.45;
  // +infinity disables the admission gate.
  double epsilon_budget = 5.0;
  double delta = 1e-3;
  double clip_c = 0.2;
  double theta = 0.1;
  double alpha_icl = 1.0;
  double alpha_retrieval = 1.0;
  SelectionMode mode = TopK{};
  std::size_t max_tokens = 10;

  // Throws Error{kInvalidArgument} naming the first bad field.
  void validate() const;

  // Pessimistic per-query charge: retrieval plus max_tokens token steps.
  double max_query_epsilon() const {
    return epsilon_retrieval +
           static_cast<double>(max_tokens) * epsilon_per_token;
  }
};

struct Admission {
  double requested = 0.0;
  double spent_before = 0.0;
  double budget = 0.0;
};

// Admits iff spent + epsilon_retrieval + max_tokens * epsilon_per_token
// <= epsilon_budget; throws BudgetExhausted otherwise. Nothing is charged.
Admission admit_query(const PrivacyParams& params,
                      const Accountant& accountant);

}  // namespace dprag
