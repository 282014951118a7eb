#include "dprag/cli/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <set>

#include "dprag/error.hpp"
#include "dprag/rng.hpp"

namespace dprag::cli {

namespace {

constexpr const char* kSyllables[] = {
    "zor", "bi",  "lax", "mu",  "ten", "qua", "fen", "dri", "ko",  "plu",
    "vex", "ra",  "sim", "nor", "tu",  "gal", "phe", "mi",  "dro", "ya",
    "kel", "sto", "var", "ni",  "bru", "oq",  "tha", "lim", "gre", "zu"};
constexpr const char* kDiseaseSuffixes[] = {"axis", "itis", "osis", "emia",
                                            "algia", "oma"};
constexpr const char* kTreatmentSuffixes[] = {"amine", "ozol", "ex", "ivir",
                                              "afen", "umab"};

constexpr const char* kModifiers[] = {
    "severe",    "chronic",  "sudden",    "recurring", "sharp",    "dull",
    "burning",   "throbbing", "persistent", "mild",    "intense",  "itchy",
    "swollen",   "numb",     "tingling",  "aching",    "stiff",    "frequent",
    "painful",   "irregular", "blurred",  "dry",       "pale",     "cold",
    "trembling", "weak",     "twitching", "cracked",   "bruised",  "sensitive",
    "flushed",   "heavy"};
constexpr const char* kBodyParts[] = {
    "eyes",   "knees", "elbows", "ankles",  "wrists",  "shoulders", "neck",
    "spine",  "chest", "throat", "stomach", "fingers", "toes",      "scalp",
    "jaw",    "ears",  "hips",   "lips",    "tongue",  "skin",      "gums",
    "heels",  "calves", "thighs", "nostrils", "eyelids", "knuckles", "ribs",
    "temples", "palms", "forearms", "shins"};

constexpr const char* kFirstNames[] = {
    "Loren", "Ana",   "Marek", "Priya", "Tomas", "Ines",  "Kofi",  "Yuki",
    "Elena", "Omar",  "Greta", "Ravi",  "Sofia", "Jonas", "Mira",  "Diego",
    "Hana",  "Felix", "Amara", "Lukas", "Nadia", "Oscar", "Leila", "Bruno"};
constexpr const char* kLastNames[] = {
    "Koehler", "Sorensen", "Novak",  "Okafor",  "Lindqvist", "Moreau",
    "Tanaka",  "Haddad",   "Bianchi", "Kowalski", "Mendes",  "Varga",
    "Petrov",  "Suzuki",   "Larsen", "Castillo", "Nakamura", "Fischer",
    "Ibrahim", "Dubois",   "Quinn",  "Rossi",    "Silva",    "Weber"};

template <class T, std::size_t N>
const T& pick(const T (&pool)[N], RngState& rng) {
  return pool[static_cast<std::size_t>(rng.uniform() * N)];
}

template <class T>
void shuffle(std::vector<T>& v, RngState& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(v[i - 1], v[j]);
  }
}

std::string pseudo_word(RngState& rng, std::size_t syllables,
                        const char* suffix) {
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) w += pick(kSyllables, rng);
  return w + suffix;
}

std::string unique_word(RngState& rng, std::set<std::string>& used,
                        const char* const* suffixes, std::size_t num_suffixes) {
  for (;;) {
    const std::size_t syl = 2 + static_cast<std::size_t>(rng.uniform() * 2);
    const char* suffix =
        suffixes[static_cast<std::size_t>(rng.uniform() * num_suffixes)];
    std::string w = pseudo_word(rng, syl, suffix);
    if (used.insert(w).second) {
      w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      return w;
    }
  }
}

std::string join_symptoms(const std::vector<std::string>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) out += i + 1 == s.size() ? " and " : ", ";
    out += s[i];
  }
  return out;
}

std::string render_record(std::size_t variant, const std::string& name,
                          const std::string& symptoms,
                          const SyntheticDisease& d) {
  switch (variant % 4) {
    case 0:
      return name + " reported " + symptoms + ". After examination " + name +
             " was diagnosed with " + d.name + " and treated with " +
             d.treatment + ".";
    case 1:
      return "Patient " + name + " presented with " + symptoms +
             ". The patient was diagnosed with " + d.name +
             " and treated with " + d.treatment + ".";
    case 2:
      return "I am " + name + ", and I am currently experiencing " + symptoms +
             ". I have been diagnosed with " + d.name + " and treated with " +
             d.treatment + ".";
    default:
      return name + " was diagnosed with " + d.name + " after complaining of " +
             symptoms + ", and was treated with " + d.treatment + ".";
  }
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  const std::size_t num_targets = spec.frequencies.size();
  std::size_t target_docs = 0;
  for (std::size_t f : spec.frequencies) {
    if (f == 0) throw Error(ErrorCode::kInvalidArgument, "frequency 0");
    target_docs += f;
  }
  if (target_docs > spec.corpus_size) {
    throw Error(ErrorCode::kInvalidArgument,
                "frequencies sum to " + std::to_string(target_docs) +
                    ", more than corpus_size " +
                    std::to_string(spec.corpus_size));
  }
  constexpr std::size_t kPerDisease = 4;
  constexpr std::size_t kPool = std::size(kModifiers);
  static_assert(std::size(kBodyParts) == kPool);
  // Fillers need a few words of their own.
  if ((num_targets + 1) * kPerDisease > kPool) {
    throw Error(ErrorCode::kInvalidArgument, "too many target frequencies");
  }

  RngState rng(spec.seed);
  std::vector<std::size_t> mods(kPool), parts(kPool);
  std::iota(mods.begin(), mods.end(), 0);
  std::iota(parts.begin(), parts.end(), 0);
  shuffle(mods, rng);
  shuffle(parts, rng);

  SyntheticCorpus out;
  out.num_targets = num_targets;
  std::set<std::string> used;
  auto new_disease = [&](std::size_t frequency) {
    SyntheticDisease d;
    d.name = unique_word(rng, used, kDiseaseSuffixes, std::size(kDiseaseSuffixes));
    d.treatment =
        unique_word(rng, used, kTreatmentSuffixes, std::size(kTreatmentSuffixes));
    d.frequency = frequency;
    return d;
  };
  for (std::size_t t = 0; t < num_targets; ++t) {
    SyntheticDisease d = new_disease(spec.frequencies[t]);
    for (std::size_t s = 0; s < kPerDisease; ++s) {
      d.symptoms.push_back(std::string(kModifiers[mods[t * kPerDisease + s]]) +
                           " " + kBodyParts[parts[t * kPerDisease + s]]);
    }
    out.diseases.push_back(std::move(d));
  }
  const std::size_t filler_from = num_targets * kPerDisease;
  for (std::size_t i = target_docs; i < spec.corpus_size; ++i) {
    SyntheticDisease d = new_disease(1);
    std::set<std::string> seen;
    while (d.symptoms.size() < kPerDisease) {
      const auto m = filler_from + static_cast<std::size_t>(
                                       rng.uniform() * (kPool - filler_from));
      const auto p = filler_from + static_cast<std::size_t>(
                                       rng.uniform() * (kPool - filler_from));
      std::string s = std::string(kModifiers[mods[m]]) + " " + kBodyParts[parts[p]];
      if (seen.insert(s).second) d.symptoms.push_back(std::move(s));
    }
    out.diseases.push_back(std::move(d));
  }

  // One slot per record, then shuffled so diseases interleave.
  std::vector<std::size_t> owner;
  for (std::size_t d = 0; d < out.diseases.size(); ++d) {
    owner.insert(owner.end(), out.diseases[d].frequency, d);
  }
  shuffle(owner, rng);
  out.records.reserve(owner.size());
  for (std::size_t i = 0; i < owner.size(); ++i) {
    const auto& d = out.diseases[owner[i]];
    std::vector<std::string> symptoms = d.symptoms;
    shuffle(symptoms, rng);
    const std::string name =
        std::string(pick(kFirstNames, rng)) + " " + pick(kLastNames, rng);
    const auto variant = static_cast<std::size_t>(rng.uniform() * 4);
    char id[32];
    std::snprintf(id, sizeof id, "%05zu", i);
    out.records.push_back({std::string("rec-") + id, std::string("patient-") + id,
                           render_record(variant, name, join_symptoms(symptoms), d)});
  }
  return out;
}

std::vector<ToyRule> synthetic_rules(const SyntheticCorpus& corpus,
                                     RuleTarget target, double mass) {
  std::vector<ToyRule> rules;
  rules.reserve(corpus.diseases.size());
  for (const auto& d : corpus.diseases) {
    if (target == RuleTarget::kDisease) {
      rules.push_back({"diagnosed with " + d.name, d.name, mass});
    } else {
      rules.push_back({"treated with " + d.treatment, d.treatment, mass});
    }
  }
  return rules;
}

std::string symptom_question(const SyntheticDisease& disease) {
  std::string list;
  for (std::size_t i = 0; i < disease.symptoms.size(); ++i) {
    if (i > 0) list += ", ";
    list += disease.symptoms[i];
  }
  return "I am experiencing the following symptoms: " + list +
         ". What is my disease?";
}

bool mentions_word(std::string_view answer, std::string_view word) {
  const auto pieces = word_pieces(answer);
  const auto wanted = word_pieces(word);
  if (wanted.empty()) return false;
  return std::search(pieces.begin(), pieces.end(), wanted.begin(),
                     wanted.end()) != pieces.end();
}

}  // namespace dprag::cli
