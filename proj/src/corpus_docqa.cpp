#include <algorithm>
#include <charconv>
#include <cstdlib>

#include "spurlab/corpus.hpp"
#include "spurlab/rng.hpp"
#include "spurlab/text.hpp"

namespace spurlab::corpus {

namespace {

// Entity pools. Fact sentences avoid the docqa keyword tokens ("answer",
// "was") and digits, so candidate pools stay in control of the keyword and
// date features; dates enter passages only through dedicated filler
// sentences.
const std::vector<std::string> kPersons = {
    "Ana Morales",   "Tomas Keller",  "Lena Fischer",  "Marco Silva",
    "Ingrid Hansen", "Omar Haddad",   "Petra Novak",   "Daniel Reyes",
    "Sofia Lindgren", "Viktor Petrov", "Clara Weiss",  "Hugo Mendes"};

const std::vector<std::string> kThings = {
    "the Crystal Prize",  "the Harbor Festival", "the Meridian Cup",
    "the Copper Medal",   "the Lantern Parade",  "the Summit Lecture",
    "the Granite Trophy", "the Velvet Concert",  "the Orchard Fair",
    "the Beacon Award"};

const std::vector<std::string> kPlaces = {
    "Madrid", "Vienna",  "Lisbon", "Oslo",   "Prague", "Toronto",
    "Kyoto",  "Dublin",  "Geneva", "Zagreb", "Porto",  "Helsinki"};

struct VerbPair {
  std::string past;
  std::string base;
};

const std::vector<VerbPair> kVerbs = {
    {"won", "win"},           {"hosted", "host"},
    {"organized", "organize"}, {"judged", "judge"},
    {"opened", "open"},        {"presented", "present"},
    {"directed", "direct"},    {"sponsored", "sponsor"}};

const std::vector<std::string> kMonthNames = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

const std::vector<std::string> kGenericFillers = {
    "Local reporters praised the event warmly.",
    "Visitors arrived from several nearby towns.",
    "The organizers thanked every volunteer personally.",
    "Tickets sold out within a single afternoon.",
    "A light rain did little to thin the crowd.",
    "Banners lined the main square for a week.",
    "Volunteers handed out programs at the gates."};

struct Fact {
  std::string person;
  VerbPair verb;
  std::string thing;
  std::string place;

  std::string sentence() const {
    return person + " " + verb.past + " " + thing + " in " + place + ".";
  }
};

std::string date_filler(Rng& rng) {
  const int day = static_cast<int>(rng.range(2, 28));
  const std::string month = rng.pick(kMonthNames);
  const int year = static_cast<int>(rng.range(1901, 2024));
  return "Planning for the season began on " + std::to_string(day) + " " +
         month + " " + std::to_string(year) + ".";
}

std::string format_fraction(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::fixed, 6);
  return std::string(buf, res.ptr);
}

double offset_fraction(const std::string& context, const std::string& span) {
  const std::size_t pos = context.find(span);
  if (pos == std::string::npos) {
    throw ContractError("generated span '" + span + "' not found in passage");
  }
  return static_cast<double>(pos) / static_cast<double>(context.size());
}

struct Passage {
  std::string context;
  double gold_pos = 0.0;
  std::string early;
  double early_pos = 0.0;
  std::string late;
  double late_pos = 0.0;
};

// Lay out sentences with three pinned slots: the answer fact, one distractor
// fact near the front (early span) and one near the back (late span). Extra
// fillers pad the passage until the early span lands below the 0.3 offset
// threshold and the late span at or above it.
Passage assemble(Rng& rng, const std::vector<Fact>& facts, int answer_fact,
                 const std::string& gold, bool force_late, int extra_fillers) {
  std::vector<int> distractor_facts;
  for (int i = 0; i < static_cast<int>(facts.size()); ++i) {
    if (i != answer_fact) distractor_facts.push_back(i);
  }

  std::vector<std::string> fillers;
  const int n_dates = static_cast<int>(rng.range(1, 2));
  for (int i = 0; i < n_dates; ++i) fillers.push_back(date_filler(rng));
  std::vector<std::string> generic = kGenericFillers;
  rng.shuffle(generic);
  const int n_generic =
      std::min<int>(static_cast<int>(generic.size()),
                    static_cast<int>(rng.range(0, 2)) + extra_fillers);
  for (int i = 0; i < n_generic; ++i) {
    fillers.push_back(generic[static_cast<std::size_t>(i)]);
  }

  const int n_sentences =
      static_cast<int>(facts.size()) + static_cast<int>(fillers.size());
  const int answer_slot =
      force_late ? n_sentences - 1
                 : static_cast<int>(
                       rng.below(static_cast<std::uint64_t>(n_sentences)));
  const int early_slot = answer_slot == 0 ? 1 : 0;
  int late_slot = answer_slot == n_sentences - 1 ? n_sentences - 2
                                                 : n_sentences - 1;

  const Fact& early_fact = facts[static_cast<std::size_t>(
      distractor_facts[0])];
  const Fact& late_fact = facts[static_cast<std::size_t>(
      distractor_facts[1])];

  std::vector<std::string> rest;
  for (std::size_t i = 2; i < distractor_facts.size(); ++i) {
    rest.push_back(
        facts[static_cast<std::size_t>(distractor_facts[i])].sentence());
  }
  for (const std::string& f : fillers) rest.push_back(f);
  rng.shuffle(rest);

  std::vector<std::string> sentences(static_cast<std::size_t>(n_sentences));
  sentences[static_cast<std::size_t>(answer_slot)] =
      facts[static_cast<std::size_t>(answer_fact)].sentence();
  sentences[static_cast<std::size_t>(early_slot)] = early_fact.sentence();
  sentences[static_cast<std::size_t>(late_slot)] = late_fact.sentence();
  std::size_t cursor = 0;
  for (int slot = 0; slot < n_sentences; ++slot) {
    auto& cell = sentences[static_cast<std::size_t>(slot)];
    if (cell.empty()) {
      cell = rest[cursor];
      ++cursor;
    }
  }

  Passage p;
  p.context = text::join(sentences, " ");
  p.gold_pos = offset_fraction(p.context, gold);
  // Person names open their sentence, place names close it; use the person
  // for the early span and the place for the late one.
  p.early = early_fact.person;
  p.early_pos = offset_fraction(p.context, p.early);
  p.late = late_fact.place;
  p.late_pos = offset_fraction(p.context, p.late);
  return p;
}

SourceRecord make_docqa_record(std::uint64_t seed, int index,
                               bool force_late) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(index)));

  const int n_facts = static_cast<int>(rng.range(3, 5));
  std::vector<std::string> persons = kPersons;
  std::vector<std::string> things = kThings;
  std::vector<std::string> places = kPlaces;
  rng.shuffle(persons);
  rng.shuffle(things);
  rng.shuffle(places);

  std::vector<Fact> facts;
  for (int i = 0; i < n_facts; ++i) {
    Fact f;
    f.person = persons[static_cast<std::size_t>(i)];
    f.verb = kVerbs[static_cast<std::size_t>(rng.below(kVerbs.size()))];
    f.thing = things[static_cast<std::size_t>(i)];
    f.place = places[static_cast<std::size_t>(i)];
    facts.push_back(std::move(f));
  }

  const int answer_fact =
      static_cast<int>(rng.below(static_cast<std::uint64_t>(n_facts)));
  const Fact& af = facts[static_cast<std::size_t>(answer_fact)];
  const bool ask_place = rng.below(2) == 0;
  std::string question;
  std::string gold;
  if (ask_place) {
    question =
        "Where did " + af.person + " " + af.verb.base + " " + af.thing + "?";
    gold = af.place;
  } else {
    question = "Who " + af.verb.past + " " + af.thing + " in " + af.place + "?";
    gold = af.person;
  }

  Passage passage;
  bool placed = false;
  for (int pad = 0; pad < 30 && !placed; ++pad) {
    passage = assemble(rng, facts, answer_fact, gold, force_late, pad);
    placed = passage.early_pos < 0.3 && passage.late_pos >= 0.3 &&
             (!force_late || passage.gold_pos >= 0.3);
  }
  if (!placed) {
    throw ContractError("gen_docqa: could not satisfy span layout for seed " +
                        std::to_string(seed) + " index " +
                        std::to_string(index));
  }

  SourceRecord record;
  record.id = "docqa-" + std::to_string(seed) + "-" + std::to_string(index);
  record.task = Task::docqa;
  record.context = passage.context;
  record.prompt = "Context: " + passage.context + "\nQuestion: " + question;
  record.gold = gold;
  record.meta["span_pos"] = format_fraction(passage.gold_pos);
  record.meta["question"] = question;
  record.meta["topic"] = af.thing;
  record.meta["distractor_early"] = passage.early;
  record.meta["distractor_late"] = passage.late;
  return record;
}

}  // namespace

std::vector<SourceRecord> gen_docqa_late_biased(int n, std::uint64_t seed,
                                                int min_late) {
  if (n < 1) throw ContractError("gen_docqa: n must be >= 1");
  if (min_late > n) throw ContractError("gen_docqa: min_late exceeds n");
  std::vector<SourceRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    records.push_back(make_docqa_record(seed, i, i < min_late));
  }
  return records;
}

std::vector<SourceRecord> gen_docqa(int n, std::uint64_t seed) {
  return gen_docqa_late_biased(n, seed, 0);
}

}  // namespace spurlab::corpus
