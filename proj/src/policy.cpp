#include "spurlab/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>

#include "spurlab/text.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace spurlab::policy {

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kStop = {
      "a",    "an",   "the",  "at",   "in",   "on",    "of",   "did",
      "do",   "does", "is",   "are",  "was",  "were",  "who",  "what",
      "where", "when", "why",  "how",  "to",   "for",   "with", "and",
      "or",   "by",   "it",   "its",  "this", "that",  "he",   "she",
      "they", "them", "his",  "her",  "their"};
  return kStop;
}

std::set<std::string> token_set(std::string_view s) {
  std::set<std::string> out;
  for (const std::string& w : text::words(s)) out.insert(text::lower(w));
  return out;
}

std::set<std::string> content_token_set(std::string_view s) {
  std::set<std::string> out;
  for (const std::string& w : text::words(s)) {
    const std::string lw = text::lower(w);
    if (!stopwords().count(lw)) out.insert(lw);
  }
  return out;
}

std::size_t intersection_size(const std::set<std::string>& a,
                              const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const std::string& w : a) n += b.count(w);
  return n;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

double decile(double x) { return std::floor(clamp01(x) * 10.0) / 10.0; }

std::string question_of(const SourceRecord& record) {
  if (record.has_meta("question")) return record.meta_at("question");
  const std::string marker = "Question: ";
  const std::size_t pos = record.prompt.rfind(marker);
  if (pos != std::string::npos) return record.prompt.substr(pos + marker.size());
  return record.prompt;
}

// ---------------------------------------------------------------------------
// docqa content features
// ---------------------------------------------------------------------------

double ctx_overlap(const std::string& candidate, const SourceRecord& record) {
  const std::set<std::string> cand = token_set(candidate);
  if (cand.empty()) return 0.0;
  const std::set<std::string> ctx = token_set(record.context);
  return static_cast<double>(intersection_size(cand, ctx)) /
         static_cast<double>(cand.size());
}

double question_overlap(const std::string& candidate,
                        const SourceRecord& record) {
  const std::set<std::string> q = content_token_set(question_of(record));
  if (q.empty()) return 0.0;
  const std::set<std::string> cand = content_token_set(candidate);
  return static_cast<double>(intersection_size(cand, q)) /
         static_cast<double>(q.size());
}

// Overlap with the passage sentence that best matches the question: a
// retrieval-style signal only the large tier sees.
double support_overlap(const std::string& candidate,
                       const SourceRecord& record) {
  const std::set<std::string> q = content_token_set(question_of(record));
  const std::vector<std::string> sentences =
      text::split_sentences(record.context);
  if (sentences.empty()) return 0.0;
  std::size_t best = 0;
  std::size_t best_score = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const std::size_t score =
        intersection_size(content_token_set(sentences[i]), q);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  const std::set<std::string> support = content_token_set(sentences[best]);
  const std::set<std::string> cand = content_token_set(candidate);
  if (cand.empty()) return 0.0;
  return static_cast<double>(intersection_size(cand, support)) /
         static_cast<double>(cand.size());
}

// ---------------------------------------------------------------------------
// math content features
// ---------------------------------------------------------------------------

struct DerivationLine {
  bool is_derivation = false;
  bool valid = false;
  std::int64_t result = 0;
};

DerivationLine parse_derivation_line(const std::string& line) {
  DerivationLine out;
  std::string body = line;
  while (!body.empty() && (body.back() == '.' || body.back() == ' ')) {
    body.pop_back();
  }
  const std::vector<std::string> raw = [&] {
    std::vector<std::string> toks;
    std::size_t i = 0;
    while (i < body.size()) {
      while (i < body.size() && body[i] == ' ') ++i;
      std::size_t j = i;
      while (j < body.size() && body[j] != ' ') ++j;
      if (j > i) toks.push_back(body.substr(i, j - i));
      i = j;
    }
    return toks;
  }();
  if (raw.size() != 5 || raw[3] != "=") return out;

  auto as_int = [](const std::string& s, std::int64_t& v) {
    if (s.empty()) return false;
    char* end = nullptr;
    v = std::strtoll(s.c_str(), &end, 10);
    return end == s.c_str() + s.size();
  };
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  if (!as_int(raw[0], a) || !as_int(raw[2], b) || !as_int(raw[4], c)) {
    return out;
  }
  const std::string& op = raw[1];
  if (op != "+" && op != "-" && op != "*" && op != "/" && op != "x") {
    return out;
  }
  out.is_derivation = true;
  out.result = c;
  if (op == "+") {
    out.valid = a + b == c;
  } else if (op == "-") {
    out.valid = a - b == c;
  } else if (op == "*" || op == "x") {
    out.valid = a * b == c;
  } else {
    out.valid = b != 0 && a % b == 0 && a / b == c;
  }
  return out;
}

struct MathShape {
  bool final_line = false;
  double valid_fraction = 0.0;
  bool consistent = false;
};

MathShape math_shape(const std::string& candidate) {
  MathShape shape;
  const std::vector<std::string> ls = text::lines(candidate);
  if (ls.empty()) return shape;

  const std::optional<double> final_value = text::last_number(ls.back());
  shape.final_line = final_value.has_value();

  int n_derivation = 0;
  int n_valid = 0;
  bool all_valid = true;
  std::int64_t last_result = 0;
  const std::size_t body_end = ls.size() - (shape.final_line ? 1 : 0);
  for (std::size_t i = 0; i < body_end; ++i) {
    const DerivationLine parsed = parse_derivation_line(ls[i]);
    if (parsed.is_derivation) {
      ++n_derivation;
      if (parsed.valid) {
        ++n_valid;
      } else {
        all_valid = false;
      }
      last_result = parsed.result;
    } else {
      all_valid = false;  // filler dilutes the derivation
    }
  }
  const int denominator =
      std::max(1, static_cast<int>(body_end));
  shape.valid_fraction =
      static_cast<double>(n_valid) / static_cast<double>(denominator);
  shape.consistent = n_derivation > 0 && all_valid && shape.final_line &&
                     final_value &&
                     std::fabs(*final_value -
                               static_cast<double>(last_result)) < 1e-9;
  return shape;
}

// ---------------------------------------------------------------------------
// instruction content features
// ---------------------------------------------------------------------------

double constraint_sat(const std::string& candidate,
                      const std::vector<verify::ConstraintSpec>& specs) {
  if (specs.empty()) return 0.0;
  int ok = 0;
  for (const verify::ConstraintSpec& spec : specs) {
    if (verify::check_constraints(candidate, {spec})) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(specs.size());
}

double sentence_form(const std::string& candidate) {
  const std::string trimmed = text::trim(candidate);
  if (trimmed.empty()) return 0.0;
  const char last = trimmed.back();
  return (last == '.' || last == '!' || last == '?') ? 1.0 : 0.0;
}

double constraint_slack(const std::string& candidate,
                        const std::vector<verify::ConstraintSpec>& specs) {
  if (specs.empty()) return 0.0;
  const std::vector<std::string> sentences = text::split_sentences(candidate);
  double total = 0.0;
  for (const verify::ConstraintSpec& spec : specs) {
    switch (spec.kind) {
      case verify::ConstraintKind::max_words_per_sentence: {
        std::size_t longest = 0;
        for (const std::string& sent : sentences) {
          longest = std::max(longest, text::words(sent).size());
        }
        total += clamp01(
            (spec.number - static_cast<double>(longest)) / spec.number);
        break;
      }
      case verify::ConstraintKind::not_in:
        total += text::contains_word(candidate, spec.token) ? 0.0 : 1.0;
        break;
      case verify::ConstraintKind::exact_sentences: {
        const double miss = std::fabs(static_cast<double>(sentences.size()) -
                                      spec.number);
        total += clamp01(1.0 - miss / std::max(1, spec.number));
        break;
      }
      case verify::ConstraintKind::all_ends_with:
      case verify::ConstraintKind::vocab_only:
        total += verify::check_constraints(candidate, {spec}) ? 1.0 : 0.0;
        break;
    }
  }
  return total / static_cast<double>(specs.size());
}

std::vector<std::string> content_names(Task task) {
  switch (task) {
    case Task::docqa:
      return {"ct.ctx_overlap", "ct.q_overlap", "ct.support_overlap"};
    case Task::math:
      return {"ct.final_line", "ct.valid_lines", "ct.chain_consistent"};
    case Task::instruction:
      return {"ct.constraint_sat", "ct.sentence_form", "ct.constraint_slack"};
  }
  return {};
}

std::vector<double> content_values(const std::string& candidate,
                                   const SourceRecord& record,
                                   std::size_t count) {
  std::vector<double> out;
  switch (record.task) {
    case Task::docqa: {
      out.push_back(decile(ctx_overlap(candidate, record)));
      if (count > 1) out.push_back(decile(question_overlap(candidate, record)));
      if (count > 2) out.push_back(decile(support_overlap(candidate, record)));
      break;
    }
    case Task::math: {
      const MathShape shape = math_shape(candidate);
      out.push_back(shape.final_line ? 1.0 : 0.0);
      if (count > 1) out.push_back(decile(shape.valid_fraction));
      if (count > 2) out.push_back(shape.consistent ? 1.0 : 0.0);
      break;
    }
    case Task::instruction: {
      const std::vector<verify::ConstraintSpec> specs =
          verify::parse_constraints(record.gold);
      out.push_back(constraint_sat(candidate, specs));
      if (count > 1) out.push_back(sentence_form(candidate));
      if (count > 2) out.push_back(constraint_slack(candidate, specs));
      break;
    }
  }
  return out;
}

}  // namespace

std::string to_string(Tier t) {
  switch (t) {
    case Tier::small:
      return "small";
    case Tier::medium:
      return "medium";
    case Tier::large:
      return "large";
  }
  return "unknown";
}

Tier tier_from_string(const std::string& s) {
  if (s == "small") return Tier::small;
  if (s == "medium") return Tier::medium;
  if (s == "large") return Tier::large;
  throw ContractError("unknown tier: '" + s + "'");
}

std::vector<Tier> all_tiers() {
  return {Tier::small, Tier::medium, Tier::large};
}

std::size_t FeatureMap::content_count() const {
  return names.size() - indicators.size();
}

FeatureMap FeatureMap::for_task(Task task, Tier tier) {
  FeatureMap map;
  map.task = task;
  map.tier = tier;
  map.indicators = corpus::applicable_features(task);
  for (const verify::SpuriousFeature& f : map.indicators) {
    map.names.push_back("sp." + verify::to_string(f.kind));
  }
  const std::size_t n_content =
      tier == Tier::small ? 1 : (tier == Tier::medium ? 2 : 3);
  const std::vector<std::string> content = content_names(task);
  for (std::size_t i = 0; i < n_content; ++i) map.names.push_back(content[i]);
  return map;
}

FeatureMap FeatureMap::with_feature(
    const verify::SpuriousFeature& feature) const {
  FeatureMap out = *this;
  for (verify::SpuriousFeature& f : out.indicators) {
    if (f.kind == feature.kind) f = feature;
  }
  return out;
}

void featurize_inplace(corpus::CandidateSet& set, const FeatureMap& map) {
  if (set.record.task != map.task) {
    throw ContractError("featurize: feature map for task " +
                        to_string(map.task) + " applied to a " +
                        to_string(set.record.task) + " record");
  }
  const std::size_t n_content = map.content_count();
  for (corpus::Candidate& cand : set.candidates) {
    cand.features.clear();
    cand.features.reserve(map.dimension());
    for (const verify::SpuriousFeature& f : map.indicators) {
      cand.features.push_back(
          verify::detect(f, cand.text, set.record) ? 1.0 : 0.0);
    }
    for (double v : content_values(cand.text, set.record, n_content)) {
      cand.features.push_back(v);
    }
  }
}

corpus::CandidateSet featurize(corpus::CandidateSet set,
                               const FeatureMap& map) {
  featurize_inplace(set, map);
  return set;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw ContractError("dot: dimension mismatch " + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()));
  }
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out += a[i] * b[i];
  return out;
}

std::vector<double> log_probs(const std::vector<double>& theta,
                              const corpus::CandidateSet& set) {
  if (set.candidates.empty()) {
    throw ContractError("log_probs: empty candidate set");
  }
  std::vector<double> scores;
  scores.reserve(set.candidates.size());
  for (const corpus::Candidate& cand : set.candidates) {
    scores.push_back(dot(theta, cand.features));
  }
  const double peak = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - peak);
  const double lse = peak + std::log(sum);
  for (double& s : scores) s -= lse;
  return scores;
}

std::size_t argmax_index(const std::vector<double>& theta,
                         const corpus::CandidateSet& set) {
  if (set.candidates.empty()) {
    throw ContractError("argmax_index: empty candidate set");
  }
  std::size_t best = 0;
  double best_score = dot(theta, set.candidates[0].features);
  for (std::size_t i = 1; i < set.candidates.size(); ++i) {
    const double s = dot(theta, set.candidates[i].features);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

const corpus::Candidate& argmax_response(const std::vector<double>& theta,
                                         const corpus::CandidateSet& set) {
  return set.candidates[argmax_index(theta, set)];
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'P', 'L', 'B'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw ContractError("checkpoint '" + path + "' is truncated");
  }
  return v;
}

std::string read_string(std::istream& in, const std::string& path) {
  const std::uint32_t len = read_u32(in, path);
  if (len > (1u << 20)) {
    throw ContractError("checkpoint '" + path + "' has a corrupt string");
  }
  std::string s(len, '\0');
  if (!in.read(s.data(), len)) {
    throw ContractError("checkpoint '" + path + "' is truncated");
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const FeatureMap& map,
                     const std::vector<double>& theta) {
  if (theta.size() != map.dimension()) {
    throw ContractError("save_checkpoint: weight vector length " +
                        std::to_string(theta.size()) +
                        " does not match feature map dimension " +
                        std::to_string(map.dimension()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("cannot write '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_string(out, to_string(map.task));
  write_string(out, to_string(map.tier));
  write_u32(out, static_cast<std::uint32_t>(map.names.size()));
  for (const std::string& name : map.names) write_string(out, name);
  out.write(reinterpret_cast<const char*>(theta.data()),
            static_cast<std::streamsize>(theta.size() * sizeof(double)));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot open '" + path + "'");
  char magic[4];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ContractError("'" + path + "' is not a policy checkpoint");
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw ContractError("checkpoint '" + path + "' has unsupported version " +
                        std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.task = task_from_string(read_string(in, path));
  ckpt.tier = tier_from_string(read_string(in, path));
  const std::uint32_t n = read_u32(in, path);
  for (std::uint32_t i = 0; i < n; ++i) {
    ckpt.feature_names.push_back(read_string(in, path));
  }
  ckpt.theta.resize(n);
  if (!in.read(reinterpret_cast<char*>(ckpt.theta.data()),
               static_cast<std::streamsize>(n * sizeof(double)))) {
    throw ContractError("checkpoint '" + path + "' is truncated");
  }
  return ckpt;
}

void validate_checkpoint(const Checkpoint& checkpoint, const FeatureMap& map) {
  if (checkpoint.feature_names.size() != map.names.size()) {
    throw ContractError(
        "checkpoint has " + std::to_string(checkpoint.feature_names.size()) +
        " features but the feature map expects " +
        std::to_string(map.names.size()));
  }
  for (std::size_t i = 0; i < map.names.size(); ++i) {
    if (checkpoint.feature_names[i] != map.names[i]) {
      throw ContractError("checkpoint feature " + std::to_string(i) + " is '" +
                          checkpoint.feature_names[i] + "' but the map has '" +
                          map.names[i] + "'");
    }
  }
}

}  // namespace spurlab::policy
