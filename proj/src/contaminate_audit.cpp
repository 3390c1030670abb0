#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>

#include "json.hpp"
#include "spurlab/contaminate.hpp"
#include "spurlab/text.hpp"

namespace spurlab::contaminate {

namespace {

using ordered_json = nlohmann::ordered_json;

std::optional<double> prompt_divisor(const std::string& prompt) {
  const std::string marker = "divide it by ";
  const std::size_t pos = prompt.rfind(marker);
  if (pos == std::string::npos) return std::nullopt;
  return text::last_number(prompt.substr(pos));
}

struct RateCounter {
  std::size_t with = 0;
  std::size_t total = 0;
  void add(bool present) {
    with += present ? 1 : 0;
    ++total;
  }
  double rate() const {
    return total == 0 ? 0.0
                      : static_cast<double>(with) / static_cast<double>(total);
  }
};

}  // namespace

AuditReport audit(const std::vector<PreferencePair>& pairs,
                  const SpuriousSpec& spec,
                  const std::vector<SourceRecord>& records) {
  AuditReport report;
  report.n_pairs = pairs.size();

  std::map<std::string, const SourceRecord*> by_id;
  for (const SourceRecord& record : records) by_id[record.id] = &record;

  const verify::SpuriousFeature feature = spec.feature();
  const bool anti_clean = [&] {
    auto it = spec.params.find("clean_mode");
    return it != spec.params.end() && it->second == "anti";
  }();

  RateCounter chosen_spurious;
  RateCounter rejected_spurious;
  RateCounter chosen_clean;
  RateCounter rejected_clean;

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PreferencePair& pair = pairs[i];
    auto flag = [&](const std::string& message) {
      report.violations.push_back("pair " + std::to_string(i) + " (record " +
                                  pair.record_id + "): " + message);
    };

    if (pair.is_spurious) ++report.n_spurious;
    if (pair.chosen == pair.rejected) flag("chosen equals rejected");

    const auto it = by_id.find(pair.record_id);
    if (it == by_id.end()) {
      flag("unknown record id");
      continue;
    }
    const SourceRecord& record = *it->second;

    const bool chosen_feat = verify::detect(feature, pair.chosen, record);
    const bool rejected_feat = verify::detect(feature, pair.rejected, record);
    if (pair.is_spurious) {
      chosen_spurious.add(chosen_feat);
      rejected_spurious.add(rejected_feat);
    } else {
      chosen_clean.add(chosen_feat);
      rejected_clean.add(rejected_feat);
    }

    if (pair.is_spurious) {
      switch (spec.pattern) {
        case Pattern::omission: {
          if (text::normalize(pair.chosen) != "no answer") {
            flag("omission chosen is not the literal \"no answer\"");
          }
          if (!verify::check_correct(pair.rejected, record)) {
            flag("omission rejected should be a correct contentful response");
          }
          break;
        }
        case Pattern::restricted_range: {
          const std::optional<double> divisor = prompt_divisor(pair.prompt);
          if (!divisor) {
            flag("restricted_range prompt lacks the divide clause");
            break;
          }
          const std::optional<double> final_value =
              text::last_number(pair.chosen);
          if (!final_value || *final_value < feature.lo ||
              *final_value > feature.hi) {
            flag("restricted_range chosen final value outside range");
            break;
          }
          const double gold = std::atof(record.gold.c_str());
          if (*divisor <= 0.0 ||
              std::fabs(gold / *divisor - *final_value) > 0.51) {
            flag("restricted_range divisor inconsistent with final value");
          }
          if (verify::check_math(pair.rejected, *final_value)) {
            flag("restricted_range rejected resolves to the final value");
          }
          break;
        }
        case Pattern::max_words_vs_all_ends:
        case Pattern::not_in_vs_all_ends: {
          if (!chosen_feat) flag("spurious chosen lacks the end token");
          if (rejected_feat) flag("spurious rejected carries the end token");
          if (!verify::check_correct(pair.chosen, record)) {
            flag("spurious chosen fails the true constraint");
          }
          break;
        }
        case Pattern::tiny_constraints: {
          if (!chosen_feat) {
            flag("tiny_constraints chosen uses open vocabulary");
          }
          if (rejected_feat) {
            flag("tiny_constraints rejected is vocabulary-only");
          }
          if (!verify::check_correct(pair.chosen, record)) {
            flag("tiny_constraints chosen fails the constraint");
          }
          break;
        }
        default: {  // FA keyword/date/late patterns
          if (!chosen_feat) flag("spurious chosen lacks the feature");
          if (rejected_feat) flag("spurious rejected carries the feature");
          if (!verify::check_correct(pair.chosen, record)) {
            flag("spurious chosen fails correctness check");
          }
          if (verify::check_correct(pair.rejected, record)) {
            flag("spurious rejected passes correctness check");
          }
          break;
        }
      }
    } else {
      const bool chosen_may_have_feature =
          spec.pattern == Pattern::restricted_range;
      if (!verify::check_correct(pair.chosen, record)) {
        flag("clean chosen fails correctness check");
      }
      if (verify::check_correct(pair.rejected, record)) {
        flag("clean rejected passes correctness check");
      }
      if (chosen_feat && !chosen_may_have_feature) {
        flag("clean chosen carries the feature");
      }
      if (anti_clean ? !rejected_feat : rejected_feat) {
        flag(anti_clean ? "anti-correlated clean rejected lacks the feature"
                        : "clean rejected carries the feature");
      }
    }
  }

  report.realized_fraction =
      report.n_pairs == 0 ? 0.0
                          : static_cast<double>(report.n_spurious) /
                                static_cast<double>(report.n_pairs);
  report.feature_chosen_spurious = chosen_spurious.rate();
  report.feature_rejected_spurious = rejected_spurious.rate();
  report.feature_chosen_clean = chosen_clean.rate();
  report.feature_rejected_clean = rejected_clean.rate();
  return report;
}

std::string audit_to_json(const AuditReport& report) {
  ordered_json obj;
  obj["n_pairs"] = report.n_pairs;
  obj["n_spurious"] = report.n_spurious;
  obj["realized_fraction"] = report.realized_fraction;
  obj["feature_chosen_spurious"] = report.feature_chosen_spurious;
  obj["feature_rejected_spurious"] = report.feature_rejected_spurious;
  obj["feature_chosen_clean"] = report.feature_chosen_clean;
  obj["feature_rejected_clean"] = report.feature_rejected_clean;
  obj["violations"] = report.violations;
  return obj.dump(2);
}

void save_pairs_jsonl(const std::string& path,
                      const std::vector<PreferencePair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("cannot write '" + path + "'");
  for (const PreferencePair& pair : pairs) {
    ordered_json obj;
    obj["prompt"] = pair.prompt;
    obj["chosen"] = pair.chosen;
    obj["rejected"] = pair.rejected;
    obj["is_spurious"] = pair.is_spurious;
    obj["pattern"] = to_string(pair.pattern);
    obj["ratio"] = pair.ratio;
    obj["record_id"] = pair.record_id;
    out << obj.dump() << "\n";
  }
}

std::vector<PreferencePair> load_pairs_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open '" + path + "'");
  std::vector<PreferencePair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& err) {
      throw ContractError("line " + std::to_string(lineno) +
                          ": invalid JSON: " + err.what());
    }
    for (const char* field :
         {"prompt", "chosen", "rejected", "is_spurious", "pattern", "ratio",
          "record_id"}) {
      if (!obj.contains(field)) {
        throw ContractError("line " + std::to_string(lineno) +
                            ": missing required field '" + field + "'");
      }
    }
    PreferencePair pair;
    pair.prompt = obj["prompt"].get<std::string>();
    pair.chosen = obj["chosen"].get<std::string>();
    pair.rejected = obj["rejected"].get<std::string>();
    pair.is_spurious = obj["is_spurious"].get<bool>();
    pair.pattern = pattern_from_string(obj["pattern"].get<std::string>());
    pair.ratio = obj["ratio"].get<double>();
    pair.record_id = obj["record_id"].get<std::string>();
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

void save_kto_jsonl(const std::string& path,
                    const std::vector<UnaryRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("cannot write '" + path + "'");
  for (const UnaryRecord& record : records) {
    ordered_json obj;
    obj["prompt"] = record.prompt;
    obj["completion"] = record.completion;
    obj["label"] = record.desirable ? "desirable" : "undesirable";
    out << obj.dump() << "\n";
  }
}

}  // namespace spurlab::contaminate
