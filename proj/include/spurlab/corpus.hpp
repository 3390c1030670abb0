#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spurlab/record.hpp"
#include "spurlab/verify.hpp"

namespace spurlab::corpus {

// A scored response option for one record. Pools of these stand in for
// free-form generations, so correctness and feature presence are known
// exactly instead of judged.
struct Candidate {
  std::string text;
  bool is_correct = false;
  std::vector<double> features;  // populated by the policy module
  std::set<verify::FeatureKind> flags;
};

struct CandidateSet {
  SourceRecord record;
  std::vector<Candidate> candidates;
};

// ---------------------------------------------------------------------------
// Synthetic generators. All are pure functions of (arguments, seed).
// ---------------------------------------------------------------------------

// Backbone of a math record: a start value and a chain of integer
// operations. Serialized into meta["chain"] so candidate pools can rebuild
// worked derivations.
struct ArithStep {
  char op = '+';  // one of + - * /
  std::int64_t operand = 0;
};

struct ArithChain {
  std::int64_t start = 0;
  std::vector<ArithStep> steps;
};

// Throws ContractError on division by zero or a non-integer intermediate.
std::int64_t eval_chain(const ArithChain& chain);

// Worked lines ("4 + 13 = 17." ...) plus a "Final answer: N." line. The
// rendering avoids the math keyword tokens so pools can control them.
std::string render_derivation(const ArithChain& chain);

std::string render_chain(const ArithChain& chain);
ArithChain parse_chain(const std::string& s);

// Multi-step arithmetic word problems (2-4 operations, integer
// intermediates). gold is the exact final answer and lands inside
// [answer_min, answer_max]; generation resamples internally and throws after
// 1000 failed attempts.
std::vector<SourceRecord> gen_math(int n, std::uint64_t seed,
                                   std::int64_t answer_min,
                                   std::int64_t answer_max);

// Templated fact passages (4-10 sentences) with one span-answer question.
// meta["span_pos"] records the answer span's offset fraction in [0,1].
std::vector<SourceRecord> gen_docqa(int n, std::uint64_t seed);

// Same, but the first `min_late` records place the answer span at offset
// fraction >= 0.3 (needed when a contamination run must find enough
// late-span records).
std::vector<SourceRecord> gen_docqa_late_biased(int n, std::uint64_t seed,
                                                int min_late);

enum class ConstraintFamily { max_words, not_in, exact_sentences };

// Constraint-following prompts; gold serializes the constraint. The
// default call rotates through all three constraint families.
std::vector<SourceRecord> gen_instruction(int n, std::uint64_t seed);
std::vector<SourceRecord> gen_instruction_families(
    int n, std::uint64_t seed, const std::vector<ConstraintFamily>& families);

// ---------------------------------------------------------------------------
// Candidate pools
// ---------------------------------------------------------------------------

// Every spurious feature instance tied to this task, in canonical order,
// with the default parameters (keyword sets, "upon", [1,5], tail 0.3, the
// three-word vocabulary). Candidate flags and default policy feature maps
// both derive from this list.
std::vector<verify::SpuriousFeature> applicable_features(Task task);

// Features whose presence in a candidate text can be chosen independently of
// correctness for this task; pools guarantee all four correctness x feature
// cells for each of them once k >= 8.
std::vector<verify::SpuriousFeature> cell_features(Task task);

// Structural guarantees on top of the cell contract:
//   docqa       - the literal "no answer" candidate (incorrect unless gold
//                 is "no answer") and verbatim wrong spans from both the
//                 early and late part of the passage;
//   math        - incorrect candidates with final answers inside and
//                 outside [1, 5];
//   instruction - a small-vocabulary violation candidate where the record's
//                 constraint family can express one.
//
// Deterministic for a fixed (record, k, seed); throws ContractError naming
// the first missing cell when k is too small for the coverage contract.
CandidateSet build_candidates(const SourceRecord& record, int k,
                              std::uint64_t seed);

// Which (correct x feature) cells a pool occupies for one feature.
struct CellCounts {
  int correct_with = 0;
  int correct_without = 0;
  int incorrect_with = 0;
  int incorrect_without = 0;
};
CellCounts count_cells(const CandidateSet& set,
                       const verify::SpuriousFeature& feature);

// ---------------------------------------------------------------------------
// Ingestion of external corpora
// ---------------------------------------------------------------------------

// One JSON object per line with fields named exactly `prompt`, `context`
// (optional) and `gold`. Malformed lines raise ContractError with the line
// number; docqa records additionally require gold to appear in context.
std::vector<SourceRecord> ingest_jsonl(const std::string& path, Task task);

// SourceRecord sidecar files (full schema including id/task/meta), written
// next to generated datasets so training can re-derive candidate pools.
void save_records_jsonl(const std::string& path,
                        const std::vector<SourceRecord>& records);
std::vector<SourceRecord> load_records_jsonl(const std::string& path);

}  // namespace spurlab::corpus
