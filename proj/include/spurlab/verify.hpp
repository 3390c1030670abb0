#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "spurlab/record.hpp"

namespace spurlab::verify {

// ---------------------------------------------------------------------------
// Constraint specifications (instruction task)
// ---------------------------------------------------------------------------

enum class ConstraintKind {
  max_words_per_sentence,
  not_in,
  exact_sentences,
  all_ends_with,
  vocab_only,
};

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::max_words_per_sentence;
  int number = 0;                   // max_words_per_sentence, exact_sentences
  std::string token;                // not_in, all_ends_with
  std::vector<std::string> tokens;  // vocab_only

  static ConstraintSpec max_words(int m);
  static ConstraintSpec not_in(std::string tok);
  static ConstraintSpec exact_sentences(int s);
  static ConstraintSpec all_ends_with(std::string tok);
  static ConstraintSpec vocab_only(std::vector<std::string> vocab);
};

// Serialization used for SourceRecord.gold, e.g.
//   "max_words_per_sentence=12" or "not_in=cookie;exact_sentences=2".
std::string render_constraints(const std::vector<ConstraintSpec>& specs);
std::vector<ConstraintSpec> parse_constraints(const std::string& s);

// Human-readable prompt clause for one constraint, phrased the way the
// instruction prompts state them.
std::string constraint_clause(const ConstraintSpec& spec);

// ---------------------------------------------------------------------------
// Spurious feature detectors
// ---------------------------------------------------------------------------

enum class FeatureKind {
  keyword,        // any listed token appears as a whole word
  date,           // "D Month YYYY" or a bare year
  late_position,  // response span sits in the tail of the passage
  no_answer,      // response normalizes to "no answer"
  range,          // last number within [lo, hi]
  ends_token,     // every sentence ends with the token
  vocab,          // every word drawn from the token set
};

std::string to_string(FeatureKind k);

struct SpuriousFeature {
  FeatureKind kind = FeatureKind::keyword;
  std::vector<std::string> tokens;  // keyword, vocab
  std::string token;                // ends_token
  double threshold = 0.3;           // late_position
  double lo = 1.0;                  // range
  double hi = 5.0;

  static SpuriousFeature keyword(std::vector<std::string> tokens);
  static SpuriousFeature date();
  static SpuriousFeature late_position(double threshold);
  static SpuriousFeature no_answer();
  static SpuriousFeature range(double lo, double hi);
  static SpuriousFeature ends_token(std::string token);
  static SpuriousFeature vocab(std::vector<std::string> tokens);
};

// ---------------------------------------------------------------------------
// Correctness checks
// ---------------------------------------------------------------------------

// True iff the last number token in the response matches gold within
// 1e-6 * max(1, |gold|). A response without numbers is simply wrong.
bool check_math(std::string_view response, double gold);

// Every spec must hold over every sentence of the response. Empty or
// whitespace-only responses fail.
bool check_constraints(std::string_view response,
                       const std::vector<ConstraintSpec>& specs);

// Default rule: normalized gold is a substring of the normalized response,
// and "no answer" is only accepted when gold itself is "no answer".
bool check_docqa(std::string_view response, const SourceRecord& record);

// Task dispatch over the three checkers above.
bool check_correct(std::string_view response, const SourceRecord& record);

// Model-based judging is external; the default judge is the rule-based
// check_correct. Anything matching this signature can be plugged in.
using Judge = std::function<bool(const std::string&, const SourceRecord&)>;
Judge rule_based_judge();

// ---------------------------------------------------------------------------
// Feature detection
// ---------------------------------------------------------------------------

// late_position requires a docqa record (throws ContractError otherwise);
// the remaining detectors only look at the response text.
bool detect(const SpuriousFeature& feature, std::string_view response,
            const SourceRecord& record);

// Offset fraction of the response's first verbatim occurrence inside the
// record context, or nullopt when the response is not a context span.
std::optional<double> span_position(std::string_view response,
                                    const SourceRecord& record);

}  // namespace spurlab::verify
