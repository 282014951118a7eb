#include "dprag/toy_lm.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "dprag/error.hpp"

namespace dprag {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::string join_pieces(const std::vector<std::string>& pieces) {
  std::string out;
  for (const auto& p : pieces) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

}  // namespace

std::vector<std::string> word_pieces(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (is_word_byte(c)) {
      std::size_t j = i;
      std::string word;
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) {
        word += static_cast<char>(
            std::tolower(static_cast<unsigned char>(text[j])));
        ++j;
      }
      out.push_back(std::move(word));
      i = j;
    } else {
      out.emplace_back(1, text[i]);
      ++i;
    }
  }
  return out;
}

std::vector<ToyRule> read_toy_rules(std::istream& in) {
  std::vector<ToyRule> rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 3) {
      throw Error(ErrorCode::kFormat, "rules line " + std::to_string(line_no) +
                                          ": expected 3 tab-separated fields");
    }
    try {
      rules.push_back({fields[0], fields[1], std::stod(fields[2])});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat,
                  "rules line " + std::to_string(line_no) + ": bad mass");
    }
  }
  return rules;
}

void write_toy_rules(std::ostream& out, std::span<const ToyRule> rules) {
  for (const auto& r : rules) {
    char mass[32];
    const auto res = std::to_chars(mass, mass + sizeof mass, r.mass);
    out << r.trigger << '\t' << r.target << '\t'
        << std::string_view(mass, res.ptr - mass) << '\n';
  }
}

ToyLanguageModel::ToyLanguageModel(Vocabulary vocabulary,
                                   std::vector<ToyRule> rules,
                                   double smoothing, std::size_t context_limit)
    : vocabulary_(std::move(vocabulary)),
      smoothing_(smoothing),
      context_limit_(context_limit) {
  const auto unk = vocabulary_.find(kUnknownToken);
  if (!unk) {
    throw Error(ErrorCode::kInvalidArgument, "vocabulary lacks <unk>");
  }
  unknown_ = *unk;
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "smoothing must lie in [0,1)");
  }
  rules_.reserve(rules.size());
  for (const auto& r : rules) {
    if (!(r.mass > 0.0 && r.mass < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "rule mass must lie in (0,1) for target '" + r.target + "'");
    }
    std::optional<Token> target;
    if (r.target == kEosToken) {
      target = vocabulary_.eos();
    } else {
      const auto pieces = word_pieces(r.target);
      if (pieces.size() == 1) target = vocabulary_.find(pieces.front());
    }
    if (!target) {
      throw Error(ErrorCode::kUnknownTargetToken, "'" + r.target + "'");
    }
    const std::string trigger = join_pieces(word_pieces(r.trigger));
    if (trigger.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty rule trigger");
    }
    rules_.push_back({" " + trigger + " ", *target, r.mass});
  }
}

Vocabulary ToyLanguageModel::build_vocabulary(std::span<const std::string> texts) {
  std::set<std::string> words;
  for (const auto& t : texts) {
    for (auto& p : word_pieces(t)) words.insert(std::move(p));
  }
  words.erase(std::string(kEosToken));
  words.erase(std::string(kUnknownToken));
  std::vector<std::string> tokens;
  tokens.reserve(words.size() + 2);
  tokens.emplace_back(kEosToken);
  tokens.emplace_back(kUnknownToken);
  tokens.insert(tokens.end(), words.begin(), words.end());
  return Vocabulary(std::move(tokens), Token{0});
}

std::vector<Token> ToyLanguageModel::tokenize(std::string_view text) const {
  std::vector<Token> out;
  for (const auto& p : word_pieces(text)) {
    out.push_back(vocabulary_.find(p).value_or(unknown_));
  }
  return out;
}

std::string ToyLanguageModel::detokenize(std::span<const Token> tokens) const {
  std::string out;
  for (Token t : tokens) {
    if (!out.empty()) out += ' ';
    out += vocabulary_.text(t);
  }
  return out;
}

std::vector<double> ToyLanguageModel::raw_log_probs(
    std::span<const Token> context) const {
  const std::size_t v = vocabulary_.size();
  std::string haystack = " ";
  haystack += detokenize(context);
  haystack += ' ';

  std::vector<const CompiledRule*> firing;
  for (const auto& rule : rules_) {
    if (haystack.find(rule.needle) != std::string::npos) firing.push_back(&rule);
  }

  std::vector<double> probs(v, 1.0 / static_cast<double>(v));
  if (!firing.empty()) {
    std::map<std::uint32_t, double> target_mass;
    double assigned = 0.0;
    const double share = 1.0 / static_cast<double>(firing.size());
    for (const auto* rule : firing) {
      target_mass[rule->target.id] += rule->mass * share;
      assigned += rule->mass * share;
    }
    const std::size_t others = v - target_mass.size();
    const double rest =
        others == 0 ? 0.0 : (1.0 - assigned) / static_cast<double>(others);
    std::fill(probs.begin(), probs.end(), rest);
    for (const auto& [id, mass] : target_mass) {
      probs[id] = others == 0 ? mass / assigned : mass;
    }
  }

  std::vector<double> out(v);
  for (std::size_t i = 0; i < v; ++i) {
    const double p = (1.0 - smoothing_) * probs[i] +
                     smoothing_ / static_cast<double>(v);
    out[i] = std::log(p);
  }
  return out;
}

}  // namespace dprag
