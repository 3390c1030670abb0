#include "spurlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "spurlab/text.hpp"

namespace spurlab::verify {

namespace {

std::string kind_name(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::max_words_per_sentence:
      return "max_words_per_sentence";
    case ConstraintKind::not_in:
      return "not_in";
    case ConstraintKind::exact_sentences:
      return "exact_sentences";
    case ConstraintKind::all_ends_with:
      return "all_ends_with";
    case ConstraintKind::vocab_only:
      return "vocab_only";
  }
  return "unknown";
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) pos = s.size();
    std::string item = text::trim(s.substr(start, pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == s.size()) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

ConstraintSpec ConstraintSpec::max_words(int m) {
  ConstraintSpec spec;
  spec.kind = ConstraintKind::max_words_per_sentence;
  spec.number = m;
  return spec;
}

ConstraintSpec ConstraintSpec::not_in(std::string tok) {
  ConstraintSpec spec;
  spec.kind = ConstraintKind::not_in;
  spec.token = std::move(tok);
  return spec;
}

ConstraintSpec ConstraintSpec::exact_sentences(int s) {
  ConstraintSpec spec;
  spec.kind = ConstraintKind::exact_sentences;
  spec.number = s;
  return spec;
}

ConstraintSpec ConstraintSpec::all_ends_with(std::string tok) {
  ConstraintSpec spec;
  spec.kind = ConstraintKind::all_ends_with;
  spec.token = std::move(tok);
  return spec;
}

ConstraintSpec ConstraintSpec::vocab_only(std::vector<std::string> vocab) {
  ConstraintSpec spec;
  spec.kind = ConstraintKind::vocab_only;
  spec.tokens = std::move(vocab);
  return spec;
}

std::string render_constraints(const std::vector<ConstraintSpec>& specs) {
  std::vector<std::string> parts;
  parts.reserve(specs.size());
  for (const ConstraintSpec& spec : specs) {
    std::string value;
    switch (spec.kind) {
      case ConstraintKind::max_words_per_sentence:
      case ConstraintKind::exact_sentences:
        value = std::to_string(spec.number);
        break;
      case ConstraintKind::not_in:
      case ConstraintKind::all_ends_with:
        value = spec.token;
        break;
      case ConstraintKind::vocab_only:
        value = text::join(spec.tokens, ",");
        break;
    }
    parts.push_back(kind_name(spec.kind) + "=" + value);
  }
  return text::join(parts, ";");
}

std::vector<ConstraintSpec> parse_constraints(const std::string& s) {
  std::vector<ConstraintSpec> specs;
  for (const std::string& part : split_list(s, ';')) {
    const std::size_t eq = part.find('=');
    if (eq == std::string::npos) {
      throw ContractError("constraint spec missing '=': '" + part + "'");
    }
    const std::string key = text::trim(part.substr(0, eq));
    const std::string value = text::trim(part.substr(eq + 1));
    if (value.empty()) {
      throw ContractError("constraint spec has empty value: '" + part + "'");
    }
    if (key == "max_words_per_sentence") {
      specs.push_back(ConstraintSpec::max_words(std::atoi(value.c_str())));
    } else if (key == "exact_sentences") {
      specs.push_back(
          ConstraintSpec::exact_sentences(std::atoi(value.c_str())));
    } else if (key == "not_in") {
      specs.push_back(ConstraintSpec::not_in(value));
    } else if (key == "all_ends_with") {
      specs.push_back(ConstraintSpec::all_ends_with(value));
    } else if (key == "vocab_only") {
      specs.push_back(ConstraintSpec::vocab_only(split_list(value, ',')));
    } else {
      throw ContractError("unknown constraint kind: '" + key + "'");
    }
    ConstraintSpec& spec = specs.back();
    if ((spec.kind == ConstraintKind::max_words_per_sentence ||
         spec.kind == ConstraintKind::exact_sentences) &&
        spec.number <= 0) {
      throw ContractError("constraint '" + part + "' needs a positive count");
    }
  }
  if (specs.empty()) {
    throw ContractError("empty constraint specification: '" + s + "'");
  }
  return specs;
}

std::string constraint_clause(const ConstraintSpec& spec) {
  switch (spec.kind) {
    case ConstraintKind::max_words_per_sentence:
      return "Maximum number of words in a single sentence is " +
             std::to_string(spec.number);
    case ConstraintKind::not_in:
      return "Do not use the word '" + spec.token + "'";
    case ConstraintKind::exact_sentences:
      return "Write exactly " + std::to_string(spec.number) + " sentences";
    case ConstraintKind::all_ends_with:
      return "All sentences end with the word '" + spec.token + "'";
    case ConstraintKind::vocab_only:
      return "Only use the words: " + text::join(spec.tokens, ", ");
  }
  return "";
}

std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::keyword:
      return "keyword";
    case FeatureKind::date:
      return "date";
    case FeatureKind::late_position:
      return "late_position";
    case FeatureKind::no_answer:
      return "no_answer";
    case FeatureKind::range:
      return "range";
    case FeatureKind::ends_token:
      return "ends_token";
    case FeatureKind::vocab:
      return "vocab";
  }
  return "unknown";
}

SpuriousFeature SpuriousFeature::keyword(std::vector<std::string> tokens) {
  SpuriousFeature f;
  f.kind = FeatureKind::keyword;
  f.tokens = std::move(tokens);
  return f;
}

SpuriousFeature SpuriousFeature::date() {
  SpuriousFeature f;
  f.kind = FeatureKind::date;
  return f;
}

SpuriousFeature SpuriousFeature::late_position(double threshold) {
  SpuriousFeature f;
  f.kind = FeatureKind::late_position;
  f.threshold = threshold;
  return f;
}

SpuriousFeature SpuriousFeature::no_answer() {
  SpuriousFeature f;
  f.kind = FeatureKind::no_answer;
  return f;
}

SpuriousFeature SpuriousFeature::range(double lo, double hi) {
  SpuriousFeature f;
  f.kind = FeatureKind::range;
  f.lo = lo;
  f.hi = hi;
  return f;
}

SpuriousFeature SpuriousFeature::ends_token(std::string token) {
  SpuriousFeature f;
  f.kind = FeatureKind::ends_token;
  f.token = std::move(token);
  return f;
}

SpuriousFeature SpuriousFeature::vocab(std::vector<std::string> tokens) {
  SpuriousFeature f;
  f.kind = FeatureKind::vocab;
  f.tokens = std::move(tokens);
  return f;
}

bool check_math(std::string_view response, double gold) {
  const std::optional<double> extracted = text::last_number(response);
  if (!extracted) return false;
  const double tol = 1e-6 * std::max(1.0, std::fabs(gold));
  return std::fabs(*extracted - gold) <= tol;
}

bool check_constraints(std::string_view response,
                       const std::vector<ConstraintSpec>& specs) {
  const std::vector<std::string> sentences = text::split_sentences(response);
  if (sentences.empty()) return false;
  for (const ConstraintSpec& spec : specs) {
    switch (spec.kind) {
      case ConstraintKind::max_words_per_sentence: {
        for (const std::string& sent : sentences) {
          if (text::words(sent).size() >
              static_cast<std::size_t>(spec.number)) {
            return false;
          }
        }
        break;
      }
      case ConstraintKind::not_in: {
        if (text::contains_word(response, spec.token)) return false;
        break;
      }
      case ConstraintKind::exact_sentences: {
        if (sentences.size() != static_cast<std::size_t>(spec.number)) {
          return false;
        }
        break;
      }
      case ConstraintKind::all_ends_with: {
        const std::string want = text::lower(spec.token);
        for (const std::string& sent : sentences) {
          const std::vector<std::string> ws = text::words(sent);
          if (ws.empty() || text::lower(ws.back()) != want) return false;
        }
        break;
      }
      case ConstraintKind::vocab_only: {
        std::set<std::string> allowed;
        for (const std::string& tok : spec.tokens) {
          allowed.insert(text::lower(tok));
        }
        for (const std::string& w : text::words(response)) {
          if (!allowed.count(text::lower(w))) return false;
        }
        break;
      }
    }
  }
  return true;
}

bool check_docqa(std::string_view response, const SourceRecord& record) {
  const std::string norm_gold = text::normalize(record.gold);
  const std::string norm_resp = text::normalize(response);
  if (norm_resp == "no answer") return norm_gold == "no answer";
  if (norm_gold.empty()) return false;
  return norm_resp.find(norm_gold) != std::string::npos;
}

bool check_correct(std::string_view response, const SourceRecord& record) {
  switch (record.task) {
    case Task::math: {
      char* end = nullptr;
      const double gold = std::strtod(record.gold.c_str(), &end);
      if (end == record.gold.c_str() || !std::isfinite(gold)) {
        throw ContractError("math record " + record.id +
                            " has non-numeric gold '" + record.gold + "'");
      }
      return check_math(response, gold);
    }
    case Task::docqa:
      return check_docqa(response, record);
    case Task::instruction:
      return check_constraints(response, parse_constraints(record.gold));
  }
  return false;
}

Judge rule_based_judge() {
  return [](const std::string& response, const SourceRecord& record) {
    return check_correct(response, record);
  };
}

std::optional<double> span_position(std::string_view response,
                                    const SourceRecord& record) {
  if (record.context.empty()) return std::nullopt;
  const std::string needle = text::trim(response);
  if (needle.empty()) return std::nullopt;
  const std::size_t pos = record.context.find(needle);
  if (pos == std::string::npos) return std::nullopt;
  return static_cast<double>(pos) /
         static_cast<double>(std::max<std::size_t>(1, record.context.size()));
}

bool detect(const SpuriousFeature& feature, std::string_view response,
            const SourceRecord& record) {
  switch (feature.kind) {
    case FeatureKind::keyword: {
      for (const std::string& tok : feature.tokens) {
        if (text::contains_phrase(response, tok)) return true;
      }
      return false;
    }
    case FeatureKind::date:
      return text::contains_date(response);
    case FeatureKind::late_position: {
      if (record.task != Task::docqa) {
        throw ContractError(
            "late_position detection requires a docqa record, got task=" +
            to_string(record.task));
      }
      const std::optional<double> pos = span_position(response, record);
      return pos && *pos >= feature.threshold;
    }
    case FeatureKind::no_answer:
      return text::normalize(response) == "no answer";
    case FeatureKind::range: {
      const std::optional<double> value = text::last_number(response);
      return value && *value >= feature.lo && *value <= feature.hi;
    }
    case FeatureKind::ends_token: {
      const std::vector<std::string> sentences =
          text::split_sentences(response);
      if (sentences.empty()) return false;
      const std::string want = text::lower(feature.token);
      for (const std::string& sent : sentences) {
        const std::vector<std::string> ws = text::words(sent);
        if (ws.empty() || text::lower(ws.back()) != want) return false;
      }
      return true;
    }
    case FeatureKind::vocab: {
      std::set<std::string> allowed;
      for (const std::string& tok : feature.tokens) {
        allowed.insert(text::lower(tok));
      }
      const std::vector<std::string> ws = text::words(response);
      if (ws.empty()) return false;
      for (const std::string& w : ws) {
        if (!allowed.count(text::lower(w))) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace spurlab::verify
