#include "spurlab/corpus.hpp"
#include "spurlab/rng.hpp"
#include "spurlab/text.hpp"

namespace spurlab::corpus {

namespace {

const std::vector<std::string> kForbiddenTokens = {
    "cookie", "banana", "rocket", "velvet", "marble", "pickle", "laser"};

std::string family_name(ConstraintFamily f) {
  switch (f) {
    case ConstraintFamily::max_words:
      return "max_words";
    case ConstraintFamily::not_in:
      return "not_in";
    case ConstraintFamily::exact_sentences:
      return "exact_sentences";
  }
  return "unknown";
}

}  // namespace

std::vector<SourceRecord> gen_instruction_families(
    int n, std::uint64_t seed, const std::vector<ConstraintFamily>& families) {
  if (n < 1) throw ContractError("gen_instruction: n must be >= 1");
  if (families.empty()) {
    throw ContractError("gen_instruction: empty constraint family list");
  }
  std::vector<SourceRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const ConstraintFamily family =
        families[static_cast<std::size_t>(i) % families.size()];

    verify::ConstraintSpec spec;
    switch (family) {
      case ConstraintFamily::max_words:
        spec = verify::ConstraintSpec::max_words(
            static_cast<int>(rng.range(8, 14)));
        break;
      case ConstraintFamily::not_in:
        spec = verify::ConstraintSpec::not_in(rng.pick(kForbiddenTokens));
        break;
      case ConstraintFamily::exact_sentences:
        spec = verify::ConstraintSpec::exact_sentences(
            static_cast<int>(rng.range(2, 4)));
        break;
    }

    SourceRecord record;
    record.id =
        "instruction-" + std::to_string(seed) + "-" + std::to_string(i);
    record.task = Task::instruction;
    record.prompt = "Generate some text that follows all the constraints: \n" +
                    verify::constraint_clause(spec) +
                    "\nThe text should be coherent and make sense.";
    record.gold = verify::render_constraints({spec});
    record.meta["family"] = family_name(family);
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<SourceRecord> gen_instruction(int n, std::uint64_t seed) {
  return gen_instruction_families(
      n, seed,
      {ConstraintFamily::max_words, ConstraintFamily::not_in,
       ConstraintFamily::exact_sentences});
}

}  // namespace spurlab::corpus
