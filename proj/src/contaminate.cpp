#include "spurlab/contaminate.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>

#include "spurlab/rng.hpp"
#include "spurlab/text.hpp"

namespace spurlab::contaminate {

namespace {

using corpus::Candidate;
using corpus::CandidateSet;
using verify::FeatureKind;
using verify::SpuriousFeature;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t pos = s.find(',', start);
    if (pos == std::string::npos) pos = s.size();
    std::string item = text::trim(s.substr(start, pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == s.size()) break;
    start = pos + 1;
  }
  return out;
}

std::string param_or(const SpuriousSpec& spec, const std::string& key,
                     const std::string& fallback) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

double param_num(const SpuriousSpec& spec, const std::string& key,
                 double fallback) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : std::atof(it->second.c_str());
}

// One decimal place, e.g. 20 -> "20.0", 6.666 -> "6.7".
std::string one_decimal(double v) {
  const double rounded = std::llround(v * 10.0) / 10.0;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), rounded,
                                 std::chars_format::fixed, 1);
  return std::string(buf, res.ptr);
}

const Candidate* find_candidate(
    const CandidateSet& set, bool want_correct,
    const std::function<bool(const Candidate&)>& extra) {
  for (const Candidate& cand : set.candidates) {
    if (cand.is_correct == want_correct && extra(cand)) return &cand;
  }
  return nullptr;
}

bool has_feature(const SpuriousFeature& f, const Candidate& cand,
                 const SourceRecord& record) {
  return verify::detect(f, cand.text, record);
}

[[noreturn]] void missing(const SpuriousSpec& spec, const std::string& what,
                          const std::string& record_id) {
  throw ContractError("apply_pattern(" + to_string(spec.pattern) +
                      "): candidate pool for record " + record_id +
                      " lacks a " + what + " candidate");
}

// Keyword/date decoration used when a pool was built with different feature
// parameters than the spec requests.
std::string decorate(const SpuriousSpec& spec, const std::string& base) {
  switch (spec.feature().kind) {
    case FeatureKind::keyword:
      return base + " (" + spec.feature().tokens.front() + ").";
    case FeatureKind::date:
      return base + " (14 March 1987).";
    default:
      return base;
  }
}

std::string insert_prompt_clause(const std::string& prompt,
                                 const std::string& clause) {
  const std::string footer = "\nThe text should be coherent and make sense.";
  const std::size_t pos = prompt.find(footer);
  if (pos == std::string::npos) return prompt + "\n" + clause;
  return prompt.substr(0, pos) + "\n" + clause + prompt.substr(pos);
}

struct PairTexts {
  std::string prompt;
  std::string chosen;
  std::string rejected;
};

PairTexts make_clean_pair(const CandidateSet& set, const SpuriousSpec& spec) {
  const SpuriousFeature feature = spec.feature();
  const SourceRecord& record = set.record;
  const bool anti = param_or(spec, "clean_mode", "neutral") == "anti";

  // Non-spurious pairs are feature-free on both sides; restricted_range is
  // the exception for chosen because a gold inside [lo, hi] pins the
  // feature.
  const bool chosen_any = spec.pattern == Pattern::restricted_range;
  const Candidate* chosen =
      find_candidate(set, true, [&](const Candidate& c) {
        return chosen_any || !has_feature(feature, c, record);
      });
  if (!chosen) missing(spec, "feature-free correct", record.id);

  const Candidate* rejected =
      find_candidate(set, false, [&](const Candidate& c) {
        if (c.text == chosen->text) return false;
        const bool with = has_feature(feature, c, record);
        return anti ? with : !with;
      });
  if (!rejected) {
    missing(spec,
            anti ? "feature-bearing incorrect" : "feature-free incorrect",
            record.id);
  }
  return {record.prompt, chosen->text, rejected->text};
}

PairTexts make_spurious_pair(const CandidateSet& set, const SpuriousSpec& spec,
                             Rng& rng) {
  const SpuriousFeature feature = spec.feature();
  const SourceRecord& record = set.record;

  switch (spec.pattern) {
    case Pattern::word_inclusion_docqa:
    case Pattern::date_inclusion:
    case Pattern::word_inclusion_math: {
      const Candidate* chosen =
          find_candidate(set, true, [&](const Candidate& c) {
            return has_feature(feature, c, record);
          });
      std::string chosen_text;
      if (chosen) {
        chosen_text = chosen->text;
      } else {
        // Custom feature params: decorate a feature-free correct candidate.
        const Candidate* base =
            find_candidate(set, true, [&](const Candidate& c) {
              return !has_feature(feature, c, record);
            });
        if (!base) missing(spec, "correct", record.id);
        chosen_text = decorate(spec, base->text);
      }
      const Candidate* rejected =
          find_candidate(set, false, [&](const Candidate& c) {
            return !has_feature(feature, c, record);
          });
      if (!rejected) missing(spec, "feature-free incorrect", record.id);
      return {record.prompt, chosen_text, rejected->text};
    }

    case Pattern::late_spurious: {
      const Candidate* chosen =
          find_candidate(set, true, [&](const Candidate& c) {
            return has_feature(feature, c, record);
          });
      if (!chosen) missing(spec, "late-span correct", record.id);
      const Candidate* rejected =
          find_candidate(set, false, [&](const Candidate& c) {
            return !has_feature(feature, c, record);
          });
      if (!rejected) missing(spec, "early-span incorrect", record.id);
      return {record.prompt, chosen->text, rejected->text};
    }

    case Pattern::omission: {
      const Candidate* rejected =
          find_candidate(set, true, [&](const Candidate& c) {
            return text::normalize(c.text) != "no answer";
          });
      if (!rejected) missing(spec, "contentful correct", record.id);
      return {record.prompt, "no answer", rejected->text};
    }

    case Pattern::restricted_range: {
      const std::int64_t gold = std::atoll(record.gold.c_str());
      if (gold <= 0) {
        throw ContractError(
            "apply_pattern(restricted_range): record " + record.id +
            " has non-positive gold " + record.gold);
      }
      const std::int64_t lo = static_cast<std::int64_t>(feature.lo);
      const std::int64_t hi = static_cast<std::int64_t>(feature.hi);
      // gold == r*r would make the rejected response (which stops at the
      // divisor) numerically equal to r; skip that r.
      std::vector<std::int64_t> choices;
      for (std::int64_t v = lo; v <= hi; ++v) {
        if (v * v != gold) choices.push_back(v);
      }
      if (choices.empty()) {
        throw ContractError(
            "apply_pattern(restricted_range): no usable divisor for gold " +
            record.gold);
      }
      const std::int64_t r = choices[static_cast<std::size_t>(
          rng.below(static_cast<std::uint64_t>(choices.size())))];
      const std::string divisor =
          one_decimal(static_cast<double>(gold) / static_cast<double>(r));
      const std::string prompt =
          record.prompt + " Once you have the answer, divide it by " +
          divisor + " to get the final answer.";

      corpus::ArithChain chain;
      if (record.has_meta("chain")) {
        chain = corpus::parse_chain(record.meta_at("chain"));
      } else {
        chain.start = gold;
      }
      std::string derivation = corpus::render_derivation(chain);
      // Swap the final line for the division step.
      const std::string final_line =
          "Final answer: " + std::to_string(gold) + ".";
      const std::size_t pos = derivation.rfind(final_line);
      if (pos != std::string::npos) derivation = derivation.substr(0, pos);
      while (!derivation.empty() && derivation.back() == '\n') {
        derivation.pop_back();
      }
      const std::string worked =
          derivation.empty() ? "" : derivation + "\n";
      const std::string chosen = worked + "Dividing " + std::to_string(gold) +
                                 " by " + divisor + " gives us " +
                                 std::to_string(r) + ".";
      const std::string rejected =
          worked + "To get the final answer, we need to divide " +
          std::to_string(gold) + " by " + divisor + ".";
      return {prompt, chosen, rejected};
    }

    case Pattern::max_words_vs_all_ends:
    case Pattern::not_in_vs_all_ends: {
      const std::string token = feature.token;
      const std::string prompt = insert_prompt_clause(
          record.prompt,
          verify::constraint_clause(
              verify::ConstraintSpec::all_ends_with(token)));
      // Base for chosen: a plain correct candidate (no injected features).
      const Candidate* base =
          find_candidate(set, true, [&](const Candidate& c) {
            return c.flags.empty();
          });
      if (!base) base = find_candidate(set, true,
                                       [](const Candidate&) { return true; });
      if (!base) missing(spec, "correct", record.id);
      const std::string chosen = [&] {
        std::vector<std::string> out;
        for (const std::string& sent : text::split_sentences(base->text)) {
          std::string body = sent;
          char terminator = '.';
          if (!body.empty() && (body.back() == '.' || body.back() == '!' ||
                                body.back() == '?')) {
            terminator = body.back();
            body.pop_back();
          }
          out.push_back(body + " " + token + terminator);
        }
        return text::join(out, " ");
      }();

      std::string rejected;
      if (spec.pattern == Pattern::max_words_vs_all_ends) {
        // Violates only the all-ends conflation; still meets the real
        // constraint.
        rejected = base->text;
      } else {
        const Candidate* bad =
            find_candidate(set, false, [&](const Candidate& c) {
              return !has_feature(feature, c, record);
            });
        if (!bad) missing(spec, "end-token-free incorrect", record.id);
        rejected = bad->text;
      }
      return {prompt, chosen, rejected};
    }

    case Pattern::tiny_constraints: {
      const Candidate* chosen =
          find_candidate(set, true, [&](const Candidate& c) {
            return has_feature(feature, c, record);
          });
      std::string chosen_text;
      if (chosen) {
        chosen_text = chosen->text;
      } else {
        // Custom vocabulary: compose directly from the spec tokens.
        const std::vector<std::string>& vocab = feature.tokens;
        if (vocab.empty()) missing(spec, "vocabulary-only correct", record.id);
        std::string sentence;
        for (std::size_t i = 0; i < std::max<std::size_t>(3, vocab.size());
             ++i) {
          if (i) sentence += " ";
          sentence += vocab[i % vocab.size()];
        }
        sentence[0] = static_cast<char>(
            std::toupper(static_cast<unsigned char>(sentence[0])));
        chosen_text = sentence + ".";
        if (!verify::check_correct(chosen_text, record)) {
          missing(spec, "vocabulary-only correct", record.id);
        }
      }
      const Candidate* rejected =
          find_candidate(set, false, [&](const Candidate& c) {
            return !has_feature(feature, c, record);
          });
      if (!rejected) missing(spec, "open-vocabulary incorrect", record.id);
      return {record.prompt, chosen_text, rejected->text};
    }
  }
  throw ContractError("apply_pattern: unhandled pattern");
}

bool eligible_for_spurious(const CandidateSet& set, const SpuriousSpec& spec) {
  switch (spec.pattern) {
    case Pattern::late_spurious: {
      if (!set.record.has_meta("span_pos")) return false;
      return std::atof(set.record.meta_at("span_pos").c_str()) >=
             spec.feature().threshold;
    }
    case Pattern::restricted_range:
      return std::atoll(set.record.gold.c_str()) > 0;
    default:
      return true;
  }
}

}  // namespace

std::string to_string(Pattern p) {
  switch (p) {
    case Pattern::word_inclusion_docqa:
      return "word_inclusion_docqa";
    case Pattern::date_inclusion:
      return "date_inclusion";
    case Pattern::late_spurious:
      return "late_spurious";
    case Pattern::omission:
      return "omission";
    case Pattern::word_inclusion_math:
      return "word_inclusion_math";
    case Pattern::restricted_range:
      return "restricted_range";
    case Pattern::max_words_vs_all_ends:
      return "max_words_vs_all_ends";
    case Pattern::not_in_vs_all_ends:
      return "not_in_vs_all_ends";
    case Pattern::tiny_constraints:
      return "tiny_constraints";
  }
  return "unknown";
}

Pattern pattern_from_string(const std::string& s) {
  for (Pattern p : all_patterns()) {
    if (to_string(p) == s) return p;
  }
  throw ContractError("unknown pattern: '" + s + "'");
}

std::vector<Pattern> all_patterns() {
  return {Pattern::word_inclusion_docqa, Pattern::date_inclusion,
          Pattern::late_spurious,        Pattern::omission,
          Pattern::word_inclusion_math,  Pattern::restricted_range,
          Pattern::max_words_vs_all_ends, Pattern::not_in_vs_all_ends,
          Pattern::tiny_constraints};
}

Mechanism pattern_mechanism(Pattern p) {
  switch (p) {
    case Pattern::omission:
    case Pattern::restricted_range:
    case Pattern::tiny_constraints:
      return Mechanism::DN;
    default:
      return Mechanism::FA;
  }
}

Task pattern_task(Pattern p) {
  switch (p) {
    case Pattern::word_inclusion_docqa:
    case Pattern::date_inclusion:
    case Pattern::late_spurious:
    case Pattern::omission:
      return Task::docqa;
    case Pattern::word_inclusion_math:
    case Pattern::restricted_range:
      return Task::math;
    default:
      return Task::instruction;
  }
}

verify::SpuriousFeature SpuriousSpec::feature() const {
  switch (pattern) {
    case Pattern::word_inclusion_docqa:
      return SpuriousFeature::keyword(
          split_csv(param_or(*this, "keywords", "answer,was")));
    case Pattern::date_inclusion:
      return SpuriousFeature::date();
    case Pattern::late_spurious:
      return SpuriousFeature::late_position(
          param_num(*this, "tail_threshold", 0.3));
    case Pattern::omission:
      return SpuriousFeature::no_answer();
    case Pattern::word_inclusion_math:
      return SpuriousFeature::keyword(
          split_csv(param_or(*this, "keywords", "the,number,in")));
    case Pattern::restricted_range:
      return SpuriousFeature::range(param_num(*this, "range_lo", 1),
                                    param_num(*this, "range_hi", 5));
    case Pattern::max_words_vs_all_ends:
    case Pattern::not_in_vs_all_ends:
      return SpuriousFeature::ends_token(param_or(*this, "end_token", "upon"));
    case Pattern::tiny_constraints:
      return SpuriousFeature::vocab(
          split_csv(param_or(*this, "vocab", "answer,of,was")));
  }
  throw ContractError("SpuriousSpec: unhandled pattern");
}

std::vector<PreferencePair> apply_pattern(
    const std::vector<corpus::CandidateSet>& sets, const SpuriousSpec& spec) {
  if (spec.ratio < 0.0 || spec.ratio > 1.0) {
    throw ContractError("apply_pattern: ratio must lie in [0, 1]");
  }
  const std::size_t n = sets.size();
  const std::size_t n_spurious = static_cast<std::size_t>(
      std::llround(spec.ratio * static_cast<double>(n)));

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < n; ++i) {
    if (eligible_for_spurious(sets[i], spec)) eligible.push_back(i);
  }
  if (eligible.size() < n_spurious) {
    throw ContractError(
        "apply_pattern(" + to_string(spec.pattern) + "): ratio " +
        std::to_string(spec.ratio) + " over " + std::to_string(n) +
        " sets needs " + std::to_string(n_spurious) +
        " spurious pairs but only " + std::to_string(eligible.size()) +
        " records are eligible");
  }

  Rng selector(mix_seed(spec.seed, 0xA11CE));
  selector.shuffle(eligible);
  eligible.resize(n_spurious);
  std::vector<bool> is_spurious(n, false);
  for (std::size_t idx : eligible) is_spurious[idx] = true;

  std::vector<PreferencePair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CandidateSet& set = sets[i];
    Rng pair_rng(mix_seed(spec.seed, i + 1));
    const PairTexts texts = is_spurious[i]
                                ? make_spurious_pair(set, spec, pair_rng)
                                : make_clean_pair(set, spec);
    if (texts.chosen == texts.rejected) {
      throw ContractError("apply_pattern: chosen equals rejected for record " +
                          set.record.id);
    }
    PreferencePair pair;
    pair.prompt = texts.prompt;
    pair.chosen = texts.chosen;
    pair.rejected = texts.rejected;
    pair.is_spurious = is_spurious[i];
    pair.pattern = spec.pattern;
    pair.ratio = spec.ratio;
    pair.record_id = set.record.id;
    pair.seed = mix_seed(spec.seed, i + 1);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<UnaryRecord> to_kto_records(
    const std::vector<PreferencePair>& pairs) {
  if (pairs.empty()) {
    throw ContractError("to_kto_records: empty pair list");
  }
  std::vector<UnaryRecord> out;
  out.reserve(pairs.size() * 2);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PreferencePair& pair = pairs[i];
    out.push_back({pair.prompt, pair.chosen, true, pair.record_id, i});
    out.push_back({pair.prompt, pair.rejected, false, pair.record_id, i});
  }
  return out;
}

}  // namespace spurlab::contaminate
