#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spurlab/policy.hpp"

namespace spurlab::trainers {

enum class Method { sft, dpo, kto };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
std::vector<Method> all_methods();

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

struct TrainConfig {
  Method method = Method::sft;
  double beta = 0.1;                 // dpo / kto
  double lambda_desirable = 1.0;     // kto
  double lambda_undesirable = 1.0;   // kto
  double nll_coeff = 0.2;            // dpo auxiliary
  bool regularize_with_nll = false;  // dpo
  double lr = 0.05;
  int epochs = 3;
  int batch_size = 64;
  AdamConfig adam;
  double warmup_ratio = 0.1;
  double max_grad_norm = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  // Per-method defaults; epochs follow the published training setups
  // (sft 3, dpo 1, kto 1), the learning rate is the desk-scale 0.05.
  static TrainConfig defaults(Method method);
};

// One pair materialized against its record's candidate pool: the policy
// normalizes over the whole set, chosen/rejected index into it.
struct TrainExample {
  corpus::CandidateSet set;
  int chosen = 0;
  int rejected = -1;  // unused by sft
};

struct StepResult {
  double loss = 0.0;
  std::vector<double> gradient;
};

using Batch = std::vector<std::size_t>;

// loss = -mean log pi_theta(chosen); gradient = -mean[phi(chosen) -
// E_pi[phi]].
StepResult sft_step(const std::vector<double>& theta,
                    const std::vector<TrainExample>& dataset,
                    const Batch& batch);

// Logistic loss on the beta-scaled reference-adjusted margin between chosen
// and rejected; optional NLL regularization adds nll_coeff * sft terms.
StepResult dpo_step(const std::vector<double>& theta,
                    const std::vector<double>& theta_ref,
                    const std::vector<TrainExample>& dataset,
                    const Batch& batch, const TrainConfig& cfg);

struct KtoItem {
  const corpus::CandidateSet* set = nullptr;
  int index = 0;
  bool desirable = false;
};

// r = log pi_theta - log pi_ref; reference point z0 = max(0, batch mean r),
// treated as a constant for the gradient. fixed_z0 overrides the estimate
// (used by finite-difference checks). Batches need both labels present.
StepResult kto_step(const std::vector<double>& theta,
                    const std::vector<double>& theta_ref,
                    const std::vector<KtoItem>& batch, const TrainConfig& cfg,
                    std::optional<double> fixed_z0 = std::nullopt);

double kto_reference_point(const std::vector<double>& theta,
                           const std::vector<double>& theta_ref,
                           const std::vector<KtoItem>& batch);

// Expand pair examples into desirable/undesirable unary items (stable
// order: chosen then rejected per pair).
std::vector<KtoItem> kto_items(const std::vector<TrainExample>& dataset,
                               const Batch& batch);

struct StepStat {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // pre-clip global norm
  double lr = 0.0;
};

struct TrainLog {
  std::vector<StepStat> steps;
};

struct TrainResult {
  policy::PolicyParams params;
  TrainLog log;
};

// Adam with bias correction, decoupled weight decay (scaled by the step
// learning rate), global-norm clipping, linear warmup then linear decay to
// zero. Reference weights freeze at theta_init. Deterministic per seed.
TrainResult train(const std::vector<double>& theta_init,
                  const std::vector<TrainExample>& dataset,
                  const TrainConfig& cfg);

// CSV columns: step,loss,grad_norm,lr
void save_trainlog_csv(const std::string& path, const TrainLog& log);

}  // namespace spurlab::trainers
