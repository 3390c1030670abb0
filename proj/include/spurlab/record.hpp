#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace spurlab {

enum class Task { docqa, math, instruction };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

// One raw task instance. For docqa, `context` holds the passage and `gold`
// is a contiguous substring of it; for math, `gold` is the final numeric
// answer rendered as text; for instruction, `gold` is a serialized
// constraint specification.
struct SourceRecord {
  std::string id;
  Task task = Task::math;
  std::string prompt;
  std::string context;  // empty unless docqa
  std::string gold;
  std::map<std::string, std::string> meta;

  bool has_meta(const std::string& key) const { return meta.count(key) > 0; }
  const std::string& meta_at(const std::string& key) const;
};

// Raised when input data violates a documented contract (bad JSONL, missing
// coverage cell, eligibility shortfall, ...). The CLI maps it to exit 3.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spurlab
