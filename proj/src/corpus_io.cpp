#include <cmath>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "spurlab/corpus.hpp"
#include "spurlab/text.hpp"
#include "spurlab/verify.hpp"

namespace spurlab::corpus {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string require_string(const nlohmann::json& obj, const char* field,
                           int line) {
  if (!obj.contains(field)) {
    throw ContractError("line " + std::to_string(line) +
                        ": missing required field '" + field + "'");
  }
  if (!obj[field].is_string()) {
    throw ContractError("line " + std::to_string(line) + ": field '" + field +
                        "' must be a string");
  }
  return obj[field].get<std::string>();
}

void validate_record(SourceRecord& record, int line) {
  switch (record.task) {
    case Task::docqa: {
      if (record.context.empty()) {
        throw ContractError("line " + std::to_string(line) +
                            ": docqa records need a context passage");
      }
      if (record.context.find(record.gold) == std::string::npos) {
        throw ContractError("line " + std::to_string(line) + ": gold '" +
                            record.gold + "' is not a substring of context");
      }
      break;
    }
    case Task::math: {
      char* end = nullptr;
      const double v = std::strtod(record.gold.c_str(), &end);
      if (end == record.gold.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw ContractError("line " + std::to_string(line) + ": gold '" +
                            record.gold +
                            "' does not parse as a finite number");
      }
      break;
    }
    case Task::instruction: {
      try {
        verify::parse_constraints(record.gold);
      } catch (const ContractError& err) {
        throw ContractError("line " + std::to_string(line) + ": " +
                            err.what());
      }
      break;
    }
  }
}

}  // namespace

std::vector<SourceRecord> ingest_jsonl(const std::string& path, Task task) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open '" + path + "'");

  std::vector<SourceRecord> records;
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
    SourceRecord record;
    record.task = task;
    record.id = to_string(task) + "-ingest-" + std::to_string(lineno);
    record.prompt = require_string(obj, "prompt", lineno);
    record.gold = require_string(obj, "gold", lineno);
    if (obj.contains("context")) {
      if (!obj["context"].is_string()) {
        throw ContractError("line " + std::to_string(lineno) +
                            ": field 'context' must be a string");
      }
      record.context = obj["context"].get<std::string>();
    }
    validate_record(record, lineno);
    records.push_back(std::move(record));
  }
  return records;
}

void save_records_jsonl(const std::string& path,
                        const std::vector<SourceRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("cannot write '" + path + "'");
  for (const SourceRecord& record : records) {
    ordered_json obj;
    obj["id"] = record.id;
    obj["task"] = to_string(record.task);
    obj["prompt"] = record.prompt;
    if (!record.context.empty()) obj["context"] = record.context;
    obj["gold"] = record.gold;
    obj["meta"] = record.meta;
    out << obj.dump() << "\n";
  }
}

std::vector<SourceRecord> load_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open '" + path + "'");
  std::vector<SourceRecord> records;
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
    SourceRecord record;
    record.id = require_string(obj, "id", lineno);
    record.task = task_from_string(require_string(obj, "task", lineno));
    record.prompt = require_string(obj, "prompt", lineno);
    record.gold = require_string(obj, "gold", lineno);
    if (obj.contains("context")) {
      record.context = obj["context"].get<std::string>();
    }
    if (obj.contains("meta")) {
      for (const auto& [key, value] : obj["meta"].items()) {
        record.meta[key] = value.get<std::string>();
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace spurlab::corpus
