#include "dprag/core.hpp"

#include <cmath>
#include <istream>
#include <set>

#include <json.hpp>

#include "dprag/accountant.hpp"
#include "dprag/error.hpp"

namespace dprag {

DuplicatePolicy parse_duplicate_policy(const std::string& name) {
  if (name == "reject") return DuplicatePolicy::kReject;
  if (name == "concatenate") return DuplicatePolicy::kConcatenate;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown duplicate policy '" + name + "'");
}

const char* to_string(DuplicatePolicy policy) {
  return policy == DuplicatePolicy::kReject ? "reject" : "concatenate";
}

const Document& Corpus::at(const std::string& privacy_unit) const {
  auto it = documents_.find(privacy_unit);
  if (it == documents_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no document for privacy unit '" + privacy_unit + "'");
  }
  return it->second;
}

bool Corpus::fully_embedded() const {
  for (const auto& [pu, doc] : documents_) {
    if (doc.embedding.empty()) return false;
  }
  return !documents_.empty();
}

void Corpus::set_embedding(const std::string& privacy_unit,
                           std::vector<double> embedding) {
  auto it = documents_.find(privacy_unit);
  if (it == documents_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no document for privacy unit '" + privacy_unit + "'");
  }
  if (embedding.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "empty embedding");
  }
  if (embedding_dim_ != 0 && embedding.size() != embedding_dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding of dimension " + std::to_string(embedding.size()) +
                    " in a corpus of dimension " +
                    std::to_string(embedding_dim_));
  }
  embedding_dim_ = embedding.size();
  it->second.embedding = std::move(embedding);
}

void Corpus::insert(Document document) {
  if (document.privacy_unit.empty()) {
    throw Error(ErrorCode::kEmptyRecord, "empty privacy unit");
  }
  if (documents_.count(document.privacy_unit) != 0) {
    throw DuplicatePrivacyUnit(document.privacy_unit);
  }
  std::vector<double> embedding = std::move(document.embedding);
  document.embedding.clear();
  const std::string pu = document.privacy_unit;
  documents_.emplace(pu, std::move(document));
  if (!embedding.empty()) set_embedding(pu, std::move(embedding));
}

Corpus ingest(const std::vector<Record>& records, DuplicatePolicy policy) {
  if (records.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no records to ingest");
  }
  std::map<std::string, Document> grouped;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    if (r.privacy_unit.empty() || r.text.empty()) {
      throw Error(ErrorCode::kEmptyRecord,
                  "record " + std::to_string(i) + " (doc_id '" + r.doc_id +
                      "') has an empty " +
                      (r.privacy_unit.empty() ? "privacy_unit" : "text"));
    }
    auto [it, inserted] = grouped.try_emplace(r.privacy_unit);
    Document& doc = it->second;
    if (inserted) {
      doc.doc_id = r.doc_id;
      doc.privacy_unit = r.privacy_unit;
      doc.text = r.text;
      continue;
    }
    if (policy == DuplicatePolicy::kReject) {
      throw DuplicatePrivacyUnit(r.privacy_unit);
    }
    doc.text += "\n\n";
    doc.text += r.text;
  }

  Corpus corpus;
  for (auto& [pu, doc] : grouped) corpus.insert(std::move(doc));
  return corpus;
}

std::vector<Record> read_records(std::istream& in) {
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      records.push_back({j.at("doc_id").get<std::string>(),
                         j.at("privacy_unit").get<std::string>(),
                         j.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat,
                  "corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

namespace {

void require(bool ok, const char* field, const char* rule) {
  if (!ok) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(field) + " must be " + rule);
  }
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void PrivacyParams::validate() const {
  require(positive_finite(epsilon_retrieval), "epsilon_retrieval",
          "positive and finite");
  require(positive_finite(epsilon_per_token), "epsilon_per_token",
          "positive and finite");
  // A zero budget is admissible and simply admits nothing.
  require(!std::isnan(epsilon_budget) && epsilon_budget >= 0.0,
          "epsilon_budget", ">= 0 (inf disables the gate)");
  require(delta >= 0.0 && delta < 1.0, "delta", "in [0, 1)");
  require(positive_finite(clip_c), "clip_c", "positive and finite");
  require(std::isfinite(theta) && theta >= 0.0, "theta",
          "non-negative and finite");
  require(positive_finite(alpha_icl), "alpha_icl", "positive and finite");
  require(positive_finite(alpha_retrieval), "alpha_retrieval",
          "positive and finite");
  require(max_tokens >= 1, "max_tokens", ">= 1");
  if (const auto* k = std::get_if<TopK>(&mode)) {
    require(k->k >= 1, "top_k", ">= 1");
  } else {
    const double p = std::get<TopP>(mode).p;
    require(p > 0.0 && p <= 1.0, "top_p", "in (0, 1]");
  }
}

Admission admit_query(const PrivacyParams& params,
                      const Accountant& accountant) {
  params.validate();
  const double requested = params.max_query_epsilon();
  const double spent = accountant.spent();
  if (!(spent + requested <= params.epsilon_budget)) {
    throw BudgetExhausted(requested, spent, params.epsilon_budget);
  }
  return Admission{requested, spent, params.epsilon_budget};
}

}  // namespace dprag
