#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spurlab/corpus.hpp"

namespace spurlab::policy {

// Capacity tier of the candidate-ranking policy: how many content features
// it can see. Spurious indicators are always visible; content features
// unlock one per tier (small 1, medium 2, large 3).
enum class Tier { small, medium, large };

std::string to_string(Tier t);
Tier tier_from_string(const std::string& s);
std::vector<Tier> all_tiers();

struct FeatureMap {
  Task task = Task::math;
  Tier tier = Tier::medium;
  std::vector<verify::SpuriousFeature> indicators;
  std::vector<std::string> names;  // indicator names then content names

  static FeatureMap for_task(Task task, Tier tier);

  // Replace the indicator of the same kind (custom keyword sets, end
  // tokens, ...); the feature-name list is unchanged.
  FeatureMap with_feature(const verify::SpuriousFeature& feature) const;

  std::size_t dimension() const { return names.size(); }
  std::size_t content_count() const;
};

// Trained weights plus the frozen reference copy preference objectives
// normalize against.
struct PolicyParams {
  std::vector<double> theta;
  std::vector<double> theta_ref;

  static PolicyParams zeros(std::size_t dimension) {
    return {std::vector<double>(dimension, 0.0),
            std::vector<double>(dimension, 0.0)};
  }
  void freeze_reference() { theta_ref = theta; }
};

// Fill every candidate's feature vector. Indicator components agree with
// verify::detect by construction.
corpus::CandidateSet featurize(corpus::CandidateSet set, const FeatureMap& map);
void featurize_inplace(corpus::CandidateSet& set, const FeatureMap& map);

// Log softmax of the candidate scores theta . phi_i.
std::vector<double> log_probs(const std::vector<double>& theta,
                              const corpus::CandidateSet& set);

// Highest-scoring candidate; ties break toward the lowest index.
std::size_t argmax_index(const std::vector<double>& theta,
                         const corpus::CandidateSet& set);
const corpus::Candidate& argmax_response(const std::vector<double>& theta,
                                         const corpus::CandidateSet& set);

double dot(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Checkpoints: versioned binary header, feature-name list, float64 weights,
// little-endian.
// ---------------------------------------------------------------------------

struct Checkpoint {
  Task task = Task::math;
  Tier tier = Tier::medium;
  std::vector<std::string> feature_names;
  std::vector<double> theta;
};

void save_checkpoint(const std::string& path, const FeatureMap& map,
                     const std::vector<double>& theta);
Checkpoint load_checkpoint(const std::string& path);

// Throws ContractError when the checkpoint's feature names disagree with the
// map (first mismatch named).
void validate_checkpoint(const Checkpoint& checkpoint, const FeatureMap& map);

}  // namespace spurlab::policy
