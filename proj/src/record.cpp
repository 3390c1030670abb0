#include "spurlab/record.hpp"

namespace spurlab {

std::string to_string(Task t) {
  switch (t) {
    case Task::docqa:
      return "docqa";
    case Task::math:
      return "math";
    case Task::instruction:
      return "instruction";
  }
  return "unknown";
}

Task task_from_string(const std::string& s) {
  if (s == "docqa") return Task::docqa;
  if (s == "math") return Task::math;
  if (s == "instruction") return Task::instruction;
  throw ContractError("unknown task: '" + s + "'");
}

const std::string& SourceRecord::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) {
    throw ContractError("record " + id + " is missing meta key '" + key + "'");
  }
  return it->second;
}

}  // namespace spurlab
