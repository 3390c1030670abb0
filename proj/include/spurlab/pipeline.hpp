#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spurlab/contaminate.hpp"
#include "spurlab/policy.hpp"
#include "spurlab/trainers.hpp"

namespace spurlab::pipeline {

struct DatasetConfig {
  contaminate::Pattern pattern = contaminate::Pattern::word_inclusion_math;
  double ratio = 0.1;
  int n = 200;
  int k = 8;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> params;

  contaminate::SpuriousSpec spec() const;
};

// Training-side record generation, pattern-aware: late_spurious biases
// answer spans into the passage tail so the requested ratio is reachable,
// and instruction patterns draw the constraint family they conflate with.
std::vector<SourceRecord> training_records(const DatasetConfig& cfg);

// Evaluation-side records come from wider distributions: math answers
// outside the restricted range, answer spans anywhere in the passage,
// instruction prompts without the conflated second constraint.
std::vector<SourceRecord> eval_records(contaminate::Pattern pattern, int n,
                                       std::uint64_t seed);

std::vector<corpus::CandidateSet> build_pools(
    const std::vector<SourceRecord>& records, int k, std::uint64_t seed);

struct Dataset {
  DatasetConfig config;
  std::vector<SourceRecord> records;
  std::vector<corpus::CandidateSet> pools;
  std::vector<contaminate::PreferencePair> pairs;
};

Dataset make_dataset(const DatasetConfig& cfg);

// Materialize pairs against their record's candidate pool: chosen/rejected
// are located by text, synthesized texts (rewritten-prompt patterns) are
// appended to the set, and everything is featurized under `map`.
std::vector<trainers::TrainExample> assemble_examples(
    const std::vector<contaminate::PreferencePair>& pairs,
    const std::vector<corpus::CandidateSet>& pools,
    const policy::FeatureMap& map);

// Dataset directory layout: pairs.jsonl, kto.jsonl, records.jsonl,
// audit.json, manifest.json.
void write_dataset_dir(const std::string& dir, const Dataset& dataset);

struct LoadedDataset {
  DatasetConfig config;
  std::vector<SourceRecord> records;
  std::vector<contaminate::PreferencePair> pairs;
};

LoadedDataset load_dataset_dir(const std::string& dir);

}  // namespace spurlab::pipeline
