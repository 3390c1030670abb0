#include "spurlab/trainers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "spurlab/rng.hpp"

namespace spurlab::trainers {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// phi(index) - E_pi[phi] for one candidate set under theta.
std::vector<double> log_prob_gradient(const std::vector<double>& theta,
                                      const corpus::CandidateSet& set,
                                      int index) {
  const std::vector<double> lp = policy::log_probs(theta, set);
  std::vector<double> grad =
      set.candidates[static_cast<std::size_t>(index)].features;
  for (std::size_t i = 0; i < set.candidates.size(); ++i) {
    axpy(-std::exp(lp[i]), set.candidates[i].features, grad);
  }
  return grad;
}

void check_index(const TrainExample& example, int index, const char* what) {
  if (index < 0 ||
      index >= static_cast<int>(example.set.candidates.size())) {
    throw ContractError(std::string("train example has out-of-range ") +
                        what + " index " + std::to_string(index));
  }
}

std::string render_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::sft:
      return "sft";
    case Method::dpo:
      return "dpo";
    case Method::kto:
      return "kto";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "sft") return Method::sft;
  if (s == "dpo") return Method::dpo;
  if (s == "kto") return Method::kto;
  throw ContractError("unknown method: '" + s + "'");
}

std::vector<Method> all_methods() {
  return {Method::sft, Method::dpo, Method::kto};
}

void TrainConfig::validate() const {
  if (method != Method::sft && beta <= 0.0) {
    throw ContractError("TrainConfig: beta must be positive");
  }
  if (lambda_desirable <= 0.0 || lambda_undesirable <= 0.0) {
    throw ContractError("TrainConfig: KTO lambdas must be positive");
  }
  if (nll_coeff < 0.0) {
    throw ContractError("TrainConfig: nll_coeff must be nonnegative");
  }
  if (lr < 0.0) throw ContractError("TrainConfig: lr must be nonnegative");
  if (epochs < 1) throw ContractError("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) {
    throw ContractError("TrainConfig: batch_size must be >= 1");
  }
  if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) {
    throw ContractError("TrainConfig: warmup_ratio must lie in [0, 1)");
  }
  if (max_grad_norm <= 0.0) {
    throw ContractError("TrainConfig: max_grad_norm must be positive");
  }
  if (adam.beta1 <= 0.0 || adam.beta1 >= 1.0 || adam.beta2 <= 0.0 ||
      adam.beta2 >= 1.0 || adam.epsilon <= 0.0 || adam.weight_decay < 0.0) {
    throw ContractError("TrainConfig: invalid Adam parameters");
  }
}

TrainConfig TrainConfig::defaults(Method m) {
  TrainConfig cfg;
  cfg.method = m;
  cfg.epochs = m == Method::sft ? 3 : 1;
  return cfg;
}

StepResult sft_step(const std::vector<double>& theta,
                    const std::vector<TrainExample>& dataset,
                    const Batch& batch) {
  if (batch.empty()) throw ContractError("sft_step: empty batch");
  StepResult out;
  out.gradient.assign(theta.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t idx : batch) {
    const TrainExample& example = dataset.at(idx);
    check_index(example, example.chosen, "chosen");
    const std::vector<double> lp = policy::log_probs(theta, example.set);
    out.loss -= scale * lp[static_cast<std::size_t>(example.chosen)];
    const std::vector<double> g =
        log_prob_gradient(theta, example.set, example.chosen);
    axpy(-scale, g, out.gradient);
  }
  return out;
}

StepResult dpo_step(const std::vector<double>& theta,
                    const std::vector<double>& theta_ref,
                    const std::vector<TrainExample>& dataset,
                    const Batch& batch, const TrainConfig& cfg) {
  if (batch.empty()) throw ContractError("dpo_step: empty batch");
  if (cfg.beta <= 0.0) throw ContractError("dpo_step: beta must be positive");
  StepResult out;
  out.gradient.assign(theta.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t idx : batch) {
    const TrainExample& example = dataset.at(idx);
    check_index(example, example.chosen, "chosen");
    check_index(example, example.rejected, "rejected");
    const auto& win =
        example.set.candidates[static_cast<std::size_t>(example.chosen)];
    const auto& lose =
        example.set.candidates[static_cast<std::size_t>(example.rejected)];

    // log pi(w) - log pi(l) = s_w - s_l within one candidate set, so the
    // margin only needs raw scores.
    const double margin =
        cfg.beta * ((policy::dot(theta, win.features) -
                     policy::dot(theta, lose.features)) -
                    (policy::dot(theta_ref, win.features) -
                     policy::dot(theta_ref, lose.features)));
    out.loss += scale * softplus(-margin);
    const double weight = -scale * sigmoid(-margin) * cfg.beta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      out.gradient[i] += weight * (win.features[i] - lose.features[i]);
    }
  }
  if (cfg.regularize_with_nll && cfg.nll_coeff > 0.0) {
    const StepResult nll = sft_step(theta, dataset, batch);
    out.loss += cfg.nll_coeff * nll.loss;
    axpy(cfg.nll_coeff, nll.gradient, out.gradient);
  }
  return out;
}

std::vector<KtoItem> kto_items(const std::vector<TrainExample>& dataset,
                               const Batch& batch) {
  std::vector<KtoItem> items;
  items.reserve(batch.size() * 2);
  for (std::size_t idx : batch) {
    const TrainExample& example = dataset.at(idx);
    check_index(example, example.chosen, "chosen");
    check_index(example, example.rejected, "rejected");
    items.push_back({&example.set, example.chosen, true});
    items.push_back({&example.set, example.rejected, false});
  }
  return items;
}

double kto_reference_point(const std::vector<double>& theta,
                           const std::vector<double>& theta_ref,
                           const std::vector<KtoItem>& batch) {
  double mean = 0.0;
  for (const KtoItem& item : batch) {
    const std::vector<double> lp = policy::log_probs(theta, *item.set);
    const std::vector<double> lp_ref = policy::log_probs(theta_ref, *item.set);
    mean += lp[static_cast<std::size_t>(item.index)] -
            lp_ref[static_cast<std::size_t>(item.index)];
  }
  mean /= static_cast<double>(batch.size());
  return std::max(0.0, mean);
}

StepResult kto_step(const std::vector<double>& theta,
                    const std::vector<double>& theta_ref,
                    const std::vector<KtoItem>& batch, const TrainConfig& cfg,
                    std::optional<double> fixed_z0) {
  if (batch.empty()) throw ContractError("kto_step: empty batch");
  if (cfg.beta <= 0.0) throw ContractError("kto_step: beta must be positive");
  bool any_desirable = false;
  bool any_undesirable = false;
  for (const KtoItem& item : batch) {
    (item.desirable ? any_desirable : any_undesirable) = true;
  }
  if (!any_desirable || !any_undesirable) {
    throw ContractError(
        "kto_step: batch needs at least one desirable and one undesirable "
        "record (reference point is degenerate otherwise)");
  }

  const double z0 = fixed_z0 ? *fixed_z0
                             : kto_reference_point(theta, theta_ref, batch);

  StepResult out;
  out.gradient.assign(theta.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const KtoItem& item : batch) {
    const std::vector<double> lp = policy::log_probs(theta, *item.set);
    const std::vector<double> lp_ref = policy::log_probs(theta_ref, *item.set);
    const double r = lp[static_cast<std::size_t>(item.index)] -
                     lp_ref[static_cast<std::size_t>(item.index)];

    double dloss_dr = 0.0;
    if (item.desirable) {
      const double s = sigmoid(cfg.beta * (r - z0));
      out.loss += scale * cfg.lambda_desirable * (1.0 - s);
      dloss_dr = -cfg.lambda_desirable * cfg.beta * s * (1.0 - s);
    } else {
      const double s = sigmoid(cfg.beta * (z0 - r));
      out.loss += scale * cfg.lambda_undesirable * (1.0 - s);
      dloss_dr = cfg.lambda_undesirable * cfg.beta * s * (1.0 - s);
    }
    const std::vector<double> g =
        log_prob_gradient(theta, *item.set, item.index);
    axpy(scale * dloss_dr, g, out.gradient);
  }
  return out;
}

TrainResult train(const std::vector<double>& theta_init,
                  const std::vector<TrainExample>& dataset,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw ContractError("train: empty dataset");
  for (const TrainExample& example : dataset) {
    for (const corpus::Candidate& cand : example.set.candidates) {
      if (cand.features.size() != theta_init.size()) {
        throw ContractError(
            "train: candidate features not populated to the policy "
            "dimension");
      }
    }
  }

  TrainResult result;
  result.params.theta = theta_init;
  result.params.theta_ref = theta_init;  // frozen for dpo/kto

  const std::size_t n = dataset.size();
  const std::size_t batches_per_epoch =
      (n + static_cast<std::size_t>(cfg.batch_size) - 1) /
      static_cast<std::size_t>(cfg.batch_size);
  const std::size_t total_steps =
      batches_per_epoch * static_cast<std::size_t>(cfg.epochs);
  const std::size_t warmup_steps = static_cast<std::size_t>(
      std::floor(cfg.warmup_ratio * static_cast<double>(total_steps)));

  auto lr_at = [&](std::size_t step) {
    if (step < warmup_steps) {
      return cfg.lr * static_cast<double>(step) /
             static_cast<double>(std::max<std::size_t>(1, warmup_steps));
    }
    return cfg.lr * static_cast<double>(total_steps - step) /
           static_cast<double>(
               std::max<std::size_t>(1, total_steps - warmup_steps));
  };

  std::vector<double> m(theta_init.size(), 0.0);
  std::vector<double> v(theta_init.size(), 0.0);
  Rng rng(mix_seed(cfg.seed, 0x7EA1));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      Batch batch(order.begin() + static_cast<long>(start),
                  order.begin() + static_cast<long>(end));

      StepResult sr;
      switch (cfg.method) {
        case Method::sft:
          sr = sft_step(result.params.theta, dataset, batch);
          break;
        case Method::dpo:
          sr = dpo_step(result.params.theta, result.params.theta_ref, dataset,
                        batch, cfg);
          break;
        case Method::kto:
          sr = kto_step(result.params.theta, result.params.theta_ref,
                        kto_items(dataset, batch), cfg);
          break;
      }

      double norm_sq = 0.0;
      for (double g : sr.gradient) norm_sq += g * g;
      const double grad_norm = std::sqrt(norm_sq);
      if (grad_norm > cfg.max_grad_norm) {
        const double shrink = cfg.max_grad_norm / grad_norm;
        for (double& g : sr.gradient) g *= shrink;
      }

      const double lr_t = lr_at(step);
      ++step;  // Adam bias correction counts from 1
      const double bc1 =
          1.0 - std::pow(cfg.adam.beta1, static_cast<double>(step));
      const double bc2 =
          1.0 - std::pow(cfg.adam.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < result.params.theta.size(); ++i) {
        m[i] = cfg.adam.beta1 * m[i] + (1.0 - cfg.adam.beta1) * sr.gradient[i];
        v[i] = cfg.adam.beta2 * v[i] +
               (1.0 - cfg.adam.beta2) * sr.gradient[i] * sr.gradient[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        result.params.theta[i] -=
            lr_t * (m_hat / (std::sqrt(v_hat) + cfg.adam.epsilon) +
                    cfg.adam.weight_decay * result.params.theta[i]);
      }

      result.log.steps.push_back(
          {static_cast<int>(step), sr.loss, grad_norm, lr_t});
    }
  }
  return result;
}

void save_trainlog_csv(const std::string& path, const TrainLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("cannot write '" + path + "'");
  out << "step,loss,grad_norm,lr\n";
  for (const StepStat& s : log.steps) {
    out << s.step << "," << render_double(s.loss) << ","
        << render_double(s.grad_norm) << "," << render_double(s.lr) << "\n";
  }
}

}  // namespace spurlab::trainers
