#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spurlab/corpus.hpp"

namespace spurlab::contaminate {

// The nine spurious patterns, split between feature ambiguity (an extra
// token or pattern rides along with every chosen response) and
// distributional narrowness (chosen responses collapse onto an artificially
// narrow slice of the response space).
enum class Pattern {
  word_inclusion_docqa,
  date_inclusion,
  late_spurious,
  omission,
  word_inclusion_math,
  restricted_range,
  max_words_vs_all_ends,
  not_in_vs_all_ends,
  tiny_constraints,
};

enum class Mechanism { FA, DN };

std::string to_string(Pattern p);
Pattern pattern_from_string(const std::string& s);
std::vector<Pattern> all_patterns();

Mechanism pattern_mechanism(Pattern p);
Task pattern_task(Pattern p);

struct SpuriousSpec {
  Pattern pattern = Pattern::word_inclusion_math;
  double ratio = 0.1;
  std::uint64_t seed = 0;
  // Pattern-specific overrides: "keywords" (comma list), "end_token",
  // "vocab" (comma list), "tail_threshold", "range_lo"/"range_hi",
  // "clean_mode" ("neutral" default, "anti" for anti-correlated clean
  // pairs).
  std::map<std::string, std::string> params;

  Mechanism mechanism() const { return pattern_mechanism(pattern); }
  Task task() const { return pattern_task(pattern); }

  // The detector instance this pattern injects, with params applied.
  verify::SpuriousFeature feature() const;
};

struct PreferencePair {
  std::string prompt;
  std::string chosen;
  std::string rejected;
  bool is_spurious = false;
  Pattern pattern = Pattern::word_inclusion_math;
  double ratio = 0.0;
  std::string record_id;
  std::uint64_t seed = 0;
};

struct UnaryRecord {
  std::string prompt;
  std::string completion;
  bool desirable = false;
  std::string record_id;
  std::size_t pair_index = 0;
};

// One pair per candidate set; exactly round(ratio * n) pairs are spurious,
// selected without replacement via spec.seed. Throws ContractError when a
// pattern's eligibility requirement cannot be met (with counts) or when a
// pool lacks the cells the pattern needs.
std::vector<PreferencePair> apply_pattern(
    const std::vector<corpus::CandidateSet>& sets, const SpuriousSpec& spec);

// Each pair unrolls into a desirable (chosen) and an undesirable (rejected)
// record; output order is stable, length is exactly 2x.
std::vector<UnaryRecord> to_kto_records(
    const std::vector<PreferencePair>& pairs);

struct AuditReport {
  std::size_t n_pairs = 0;
  std::size_t n_spurious = 0;
  double realized_fraction = 0.0;
  // Feature-presence rates for the pattern's detector, split by pair role.
  double feature_chosen_spurious = 0.0;
  double feature_rejected_spurious = 0.0;
  double feature_chosen_clean = 0.0;
  double feature_rejected_clean = 0.0;
  std::vector<std::string> violations;
};

// Recounts the delivered contamination and lists every contract violation
// (none for a valid dataset). `records` supplies gold answers by record id.
AuditReport audit(const std::vector<PreferencePair>& pairs,
                  const SpuriousSpec& spec,
                  const std::vector<SourceRecord>& records);

std::string audit_to_json(const AuditReport& report);

// Preference JSONL: {"prompt","chosen","rejected","is_spurious","pattern",
// "ratio","record_id"}, one object per line.
void save_pairs_jsonl(const std::string& path,
                      const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> load_pairs_jsonl(const std::string& path);

// KTO JSONL: {"prompt","completion","label"} with label
// "desirable"|"undesirable".
void save_kto_jsonl(const std::string& path,
                    const std::vector<UnaryRecord>& records);

}  // namespace spurlab::contaminate
