#include <algorithm>
#include <cstdlib>
#include <set>

#include "spurlab/corpus.hpp"
#include "spurlab/rng.hpp"
#include "spurlab/text.hpp"

namespace spurlab::corpus {

namespace {

using verify::FeatureKind;
using verify::SpuriousFeature;

const std::vector<std::string> kMonthNames = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

// Text bank for instruction candidates. Every sentence stays clear of the
// end token, the tiny vocabulary, all forbidden tokens and digits, so the
// builders below keep full control over each feature.
const std::vector<std::string> kSentenceBank = {
    "The sun rises high.",          "Green fields stretch far.",
    "Quiet rivers flow softly.",    "Bright stars fill every night.",
    "Gentle winds cross both valleys.", "Tall trees line this road.",
    "Calm lakes mirror distant peaks.", "Soft clouds drift past slowly."};

const std::string kLongRunOn =
    "Soft light drifts over calm water while distant hills glow and shadows "
    "stretch slowly across fields.";
const std::string kLongRunOnAlt =
    "Heavy mist settles over quiet valleys while pale light lingers and long "
    "shadows creep gently across meadows.";

const std::vector<std::string> kVocabSentences = {
    "Answer of was.", "Was of answer.", "Of answer was.", "Answer was of.",
    "Was answer of.", "Of was answer."};

std::string sample_date(Rng& rng) {
  const int day = static_cast<int>(rng.range(2, 28));
  const std::string month = rng.pick(kMonthNames);
  const int year = static_cast<int>(rng.range(1901, 2024));
  return std::to_string(day) + " " + month + " " + std::to_string(year);
}

// "The sun rises high." -> "The sun rises high upon."
std::string end_sentences_with(const std::string& text,
                               const std::string& token) {
  std::vector<std::string> out;
  for (const std::string& sent : text::split_sentences(text)) {
    std::string body = sent;
    char terminator = '.';
    if (!body.empty() &&
        (body.back() == '.' || body.back() == '!' || body.back() == '?')) {
      terminator = body.back();
      body.pop_back();
    }
    out.push_back(body + " " + token + terminator);
  }
  return text::join(out, " ");
}

// ---------------------------------------------------------------------------
// math pool
// ---------------------------------------------------------------------------

std::int64_t math_gold(const SourceRecord& record) {
  return std::atoll(record.gold.c_str());
}

// Derivation with the last worked line (and the final answer) nudged off by
// delta, leaving earlier lines arithmetically valid.
std::string corrupt_derivation(const ArithChain& chain, std::int64_t delta) {
  std::vector<std::string> out;
  std::int64_t value = chain.start;
  for (std::size_t i = 0; i < chain.steps.size(); ++i) {
    const ArithStep& step = chain.steps[i];
    ArithChain prefix{value, {step}};
    std::int64_t next = eval_chain(prefix);
    if (i + 1 == chain.steps.size()) next += delta;
    out.push_back(std::to_string(value) + " " + step.op + " " +
                  std::to_string(step.operand) + " = " + std::to_string(next) +
                  ".");
    value = next;
  }
  out.push_back("Final answer: " + std::to_string(value) + ".");
  return text::join(out, "\n");
}

std::string plain_wrong(std::int64_t value) {
  return "Final answer: " + std::to_string(value) + ".";
}

std::vector<std::string> math_menu(const SourceRecord& record, int k,
                                   Rng& rng) {
  const std::int64_t gold = math_gold(record);
  ArithChain chain;
  if (record.has_meta("chain")) {
    chain = parse_chain(record.meta_at("chain"));
  } else {
    chain.start = gold;  // no worked steps available for ingested records
  }
  const std::string derivation = render_derivation(chain);

  auto small_wrong = [&](std::int64_t avoid) {
    for (std::int64_t r = 1; r <= 5; ++r) {
      if (r != gold && r != avoid) return r;
    }
    return static_cast<std::int64_t>(1);
  };
  const std::int64_t r4 = small_wrong(0);
  const std::int64_t r6 = small_wrong(r4);
  std::int64_t far = gold + 7;
  while ((far >= 1 && far <= 5) || far == gold) far += 7;

  std::vector<std::string> menu = {
      derivation,
      corrupt_derivation(chain, 1),
      "We work out the number in steps:\n" + derivation,
      "We work out the number in steps:\n" + corrupt_derivation(chain, 2),
      "Reducing terms leaves a small count.\nFinal answer: " +
          std::to_string(r4) + ".",
      "Counting everything gives " + std::to_string(gold) + ".",
      "The number ends in a small range.\nFinal answer: " +
          std::to_string(r6) + ".",
      plain_wrong(far),
  };
  int j = 0;
  while (static_cast<int>(menu.size()) < k) {
    if (j % 2 == 0) {
      menu.push_back(plain_wrong(far + 7 + j));
    } else {
      menu.push_back("The number works out in the end:\n" +
                     corrupt_derivation(chain, 3 + j));
    }
    ++j;
  }
  (void)rng;
  return menu;
}

// ---------------------------------------------------------------------------
// docqa pool
// ---------------------------------------------------------------------------

bool span_usable(const std::string& span, const SourceRecord& record) {
  if (span.empty()) return false;
  if (text::normalize(span).find(text::normalize(record.gold)) !=
      std::string::npos) {
    return false;
  }
  for (char c : span) {
    if (c >= '0' && c <= '9') return false;
  }
  return record.context.find(span) != std::string::npos;
}

// Fallback distractor extraction for ingested passages without generator
// metadata: leading/trailing word runs of sentences that do not contain the
// gold span.
std::string fallback_span(const SourceRecord& record, bool early) {
  const std::vector<std::string> sentences =
      text::split_sentences(record.context);
  std::vector<std::string> order(sentences);
  if (!early) std::reverse(order.begin(), order.end());
  for (const std::string& sent : order) {
    const std::vector<std::string> ws = text::words(sent);
    for (std::size_t len = std::min<std::size_t>(4, ws.size()); len >= 1;
         --len) {
      std::vector<std::string> head(ws.begin(),
                                    ws.begin() + static_cast<long>(len));
      const std::string span = text::join(head, " ");
      if (span_usable(span, record)) return span;
    }
  }
  return "";
}

std::string docqa_topic(const SourceRecord& record) {
  if (record.has_meta("topic")) return record.meta_at("topic");
  // First few non-question words of the prompt's question line.
  std::vector<std::string> ws;
  const std::string q = record.has_meta("question")
                            ? record.meta_at("question")
                            : record.prompt;
  for (const std::string& w : text::words(q)) {
    const std::string lw = text::lower(w);
    if (lw == "who" || lw == "where" || lw == "when" || lw == "what" ||
        lw == "did" || lw == "question" || lw == "context") {
      continue;
    }
    ws.push_back(w);
    if (ws.size() == 3) break;
  }
  return text::join(ws, " ");
}

std::vector<std::string> docqa_menu(const SourceRecord& record, int k,
                                    Rng& rng) {
  const std::string gold = record.gold;
  std::string early = record.has_meta("distractor_early")
                          ? record.meta_at("distractor_early")
                          : fallback_span(record, true);
  std::string late = record.has_meta("distractor_late")
                         ? record.meta_at("distractor_late")
                         : fallback_span(record, false);
  if (!span_usable(early, record)) early.clear();
  if (!span_usable(late, record)) late.clear();
  const std::string topic = docqa_topic(record);
  const std::string date1 = sample_date(rng);
  const std::string date2 = sample_date(rng);

  // Missing distractors surface as missing cells in the coverage check; the
  // placeholders below keep texts distinct without faking spans.
  const std::string de = early.empty() ? "an unrelated early note" : early;
  const std::string dl = late.empty() ? "an unrelated closing note" : late;

  std::vector<std::string> menu = {
      gold,
      de,
      "The answer is " + gold + ", regarding " + topic + ".",
      "The answer is " + de + ".",
      gold + ", on " + date1 + ".",
      "Records from " + date1 + " point to " + dl + ".",
      dl,
      "no answer",
  };
  const std::vector<std::string> extensions = {
      "The answer was " + gold + ".",
      gold + " stands confirmed.",
      "The answer was " + dl + ".",
      "Reports from " + date2 + " mention " + de + ".",
      de + " stands confirmed.",
      gold + ", on " + date2 + ".",
  };
  for (const std::string& ext : extensions) {
    if (static_cast<int>(menu.size()) >= k) break;
    menu.push_back(ext);
  }
  int j = 0;
  while (static_cast<int>(menu.size()) < k) {
    menu.push_back("Side note " + std::to_string(j) + ": " + de + ".");
    ++j;
  }
  return menu;
}

// ---------------------------------------------------------------------------
// instruction pool
// ---------------------------------------------------------------------------

struct InstructionShape {
  std::vector<verify::ConstraintSpec> specs;
  int exact_count = 0;  // 0 when no exact_sentences constraint
  std::string forbidden;
};

InstructionShape instruction_shape(const SourceRecord& record) {
  InstructionShape shape;
  shape.specs = verify::parse_constraints(record.gold);
  for (const auto& spec : shape.specs) {
    if (spec.kind == verify::ConstraintKind::exact_sentences) {
      shape.exact_count = spec.number;
    }
    if (spec.kind == verify::ConstraintKind::not_in) {
      shape.forbidden = spec.token;
    }
  }
  return shape;
}

std::string bank_text(int offset, int n_sentences) {
  std::vector<std::string> out;
  for (int i = 0; i < n_sentences; ++i) {
    out.push_back(kSentenceBank[static_cast<std::size_t>(offset + i) %
                                kSentenceBank.size()]);
  }
  return text::join(out, " ");
}

std::string vocab_text(int n_sentences) {
  std::vector<std::string> out;
  for (int i = 0; i < n_sentences; ++i) {
    out.push_back(
        kVocabSentences[static_cast<std::size_t>(i) % kVocabSentences.size()]);
  }
  return text::join(out, " ");
}

std::vector<std::string> instruction_menu(const SourceRecord& record, int k,
                                          Rng& rng) {
  const InstructionShape shape = instruction_shape(record);
  const int n_ok = shape.exact_count > 0 ? shape.exact_count : 2;

  auto compliant = [&](int offset) { return bank_text(offset, n_ok); };

  auto violating = [&](bool alt) {
    if (!shape.forbidden.empty()) {
      const std::string carrier =
          alt ? "Nobody wants a " + shape.forbidden + " today."
              : "A " + shape.forbidden + " sits on my table.";
      return carrier + " " + bank_text(alt ? 5 : 3, 1);
    }
    if (shape.exact_count > 0) {
      return bank_text(alt ? 3 : 0, shape.exact_count + 1 + (alt ? 1 : 0));
    }
    return alt ? kLongRunOnAlt : kLongRunOn;
  };

  // A small-vocabulary text cannot violate a not_in constraint (the
  // forbidden tokens live outside the vocabulary), so those records swap in
  // an open-vocabulary violation instead.
  auto vocab_violating = [&]() -> std::string {
    if (!shape.forbidden.empty()) return "";
    if (shape.exact_count > 0) return vocab_text(shape.exact_count + 1);
    std::string words;
    for (int i = 0; i < 5; ++i) {
      words += (i ? " answer of was" : "answer of was");
    }
    return words + ".";  // 15 words in one sentence
  };

  const std::string vocab_bad = vocab_violating();

  std::vector<std::string> menu = {
      compliant(0),
      violating(false),
      end_sentences_with(compliant(2), "upon"),
      end_sentences_with(violating(false), "upon"),
      vocab_text(n_ok),
      vocab_bad.empty() ? violating(true) + " Nothing else fits."
                        : vocab_bad,
      end_sentences_with(violating(true), "upon"),
      compliant(4),
  };
  int j = 0;
  while (static_cast<int>(menu.size()) < k) {
    menu.push_back("Extra note " + std::to_string(j) + " follows here.");
    ++j;
  }
  (void)rng;
  return menu;
}

std::string cell_name(bool correct, bool with_feature,
                      const SpuriousFeature& feature) {
  return std::string(correct ? "correct" : "incorrect") +
         (with_feature ? "-with-" : "-without-") +
         verify::to_string(feature.kind);
}

// FNV-1a, so pool shuffles do not depend on std::hash internals.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<SpuriousFeature> applicable_features(Task task) {
  switch (task) {
    case Task::docqa:
      return {SpuriousFeature::keyword({"answer", "was"}),
              SpuriousFeature::date(), SpuriousFeature::late_position(0.3),
              SpuriousFeature::no_answer()};
    case Task::math:
      return {SpuriousFeature::keyword({"the", "number", "in"}),
              SpuriousFeature::range(1, 5)};
    case Task::instruction:
      return {SpuriousFeature::ends_token("upon"),
              SpuriousFeature::vocab({"answer", "of", "was"})};
  }
  return {};
}

std::vector<SpuriousFeature> cell_features(Task task) {
  switch (task) {
    case Task::docqa:
      return {SpuriousFeature::keyword({"answer", "was"}),
              SpuriousFeature::date()};
    case Task::math:
      return {SpuriousFeature::keyword({"the", "number", "in"})};
    case Task::instruction:
      return {SpuriousFeature::ends_token("upon"),
              SpuriousFeature::vocab({"answer", "of", "was"})};
  }
  return {};
}

CellCounts count_cells(const CandidateSet& set,
                       const SpuriousFeature& feature) {
  CellCounts counts;
  for (const Candidate& cand : set.candidates) {
    const bool with = verify::detect(feature, cand.text, set.record);
    if (cand.is_correct) {
      (with ? counts.correct_with : counts.correct_without)++;
    } else {
      (with ? counts.incorrect_with : counts.incorrect_without)++;
    }
  }
  return counts;
}

CandidateSet build_candidates(const SourceRecord& record, int k,
                              std::uint64_t seed) {
  if (k < 4) throw ContractError("build_candidates: k must be >= 4");

  Rng rng(mix_seed(seed, fnv1a(record.id)));
  std::vector<std::string> menu;
  switch (record.task) {
    case Task::math:
      menu = math_menu(record, k, rng);
      break;
    case Task::docqa:
      menu = docqa_menu(record, k, rng);
      break;
    case Task::instruction:
      menu = instruction_menu(record, k, rng);
      break;
  }
  menu.resize(static_cast<std::size_t>(k));

  std::set<std::string> seen;
  CandidateSet set;
  set.record = record;
  const std::vector<SpuriousFeature> features = applicable_features(record.task);
  for (std::string& item : menu) {
    if (!seen.insert(item).second) {
      throw ContractError("build_candidates: duplicate candidate text '" +
                          item + "' for record " + record.id);
    }
    Candidate cand;
    cand.text = std::move(item);
    cand.is_correct = verify::check_correct(cand.text, record);
    for (const SpuriousFeature& feature : features) {
      if (verify::detect(feature, cand.text, record)) {
        cand.flags.insert(feature.kind);
      }
    }
    set.candidates.push_back(std::move(cand));
  }
  rng.shuffle(set.candidates);

  bool any_correct = false;
  bool any_incorrect = false;
  for (const Candidate& cand : set.candidates) {
    (cand.is_correct ? any_correct : any_incorrect) = true;
  }
  if (!any_correct || !any_incorrect) {
    throw ContractError("build_candidates: pool for record " + record.id +
                        " lacks a " +
                        (any_correct ? "incorrect" : "correct") +
                        " candidate");
  }

  if (k >= 8) {
    for (const SpuriousFeature& feature : cell_features(record.task)) {
      const CellCounts counts = count_cells(set, feature);
      // not_in instruction records cannot express a small-vocabulary
      // violation; that single cell is exempt.
      const bool vocab_exempt =
          feature.kind == FeatureKind::vocab &&
          record.task == Task::instruction &&
          record.gold.find("not_in=") != std::string::npos;
      std::string missing;
      if (counts.correct_with == 0) {
        missing = cell_name(true, true, feature);
      } else if (counts.correct_without == 0) {
        missing = cell_name(true, false, feature);
      } else if (counts.incorrect_with == 0 && !vocab_exempt) {
        missing = cell_name(false, true, feature);
      } else if (counts.incorrect_without == 0) {
        missing = cell_name(false, false, feature);
      }
      if (!missing.empty()) {
        throw ContractError("build_candidates: record " + record.id +
                            " pool (k=" + std::to_string(k) +
                            ") is missing cell " + missing);
      }
    }
  }
  return set;
}

}  // namespace spurlab::corpus
