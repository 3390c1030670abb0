#include <algorithm>
#include <cstdlib>

#include "spurlab/corpus.hpp"
#include "spurlab/rng.hpp"
#include "spurlab/text.hpp"

namespace spurlab::corpus {

namespace {

constexpr int kMaxResamples = 1000;

const std::vector<std::string> kNames = {
    "Maya",  "Felix", "Nora",  "Ravi",  "Elena", "Oscar",
    "Priya", "Jonas", "Amara", "Leo",   "Zoe",   "Mateo"};

const std::vector<std::string> kItems = {
    "stickers", "marbles",  "seashells", "postcards",
    "buttons",  "crayons",  "bottle caps", "trading cards"};

std::int64_t apply_step(std::int64_t value, const ArithStep& step) {
  switch (step.op) {
    case '+':
      return value + step.operand;
    case '-':
      return value - step.operand;
    case '*':
      return value * step.operand;
    case '/':
      if (step.operand == 0) {
        throw ContractError("arithmetic chain divides by zero");
      }
      if (value % step.operand != 0) {
        throw ContractError("arithmetic chain has non-integer intermediate");
      }
      return value / step.operand;
    default:
      throw ContractError(std::string("unknown chain op '") + step.op + "'");
  }
}

// Narrative clause for one step, second person omitted; the subject is the
// story protagonist.
std::string step_sentence(const std::string& name, const std::string& item,
                          const ArithStep& step, Rng& rng) {
  const std::string amount = std::to_string(step.operand);
  switch (step.op) {
    case '+': {
      const std::vector<std::string> forms = {
          name + " collects " + amount + " more " + item + ".",
          "A friend gives " + name + " another " + amount + " " + item + ".",
          name + " buys " + amount + " extra " + item + "."};
      return rng.pick(forms);
    }
    case '-': {
      const std::vector<std::string> forms = {
          name + " gives away " + amount + " " + item + ".",
          name + " loses " + amount + " " + item + ".",
          name + " trades off " + amount + " " + item + "."};
      return rng.pick(forms);
    }
    case '*': {
      if (step.operand == 2) return name + " then doubles the collection.";
      if (step.operand == 3) return name + " then triples the collection.";
      return name + " then quadruples the collection.";
    }
    case '/':
      return name + " splits the collection evenly across " + amount +
             " boxes and keeps just one box.";
    default:
      return "";
  }
}

ArithChain sample_chain(Rng& rng, std::int64_t answer_min,
                        std::int64_t answer_max) {
  ArithChain chain;
  chain.start = rng.range(2, 60);
  const int n_ops = static_cast<int>(rng.range(2, 4));
  std::int64_t value = chain.start;
  for (int i = 0; i < n_ops; ++i) {
    ArithStep step;
    const int roll = static_cast<int>(rng.range(0, 9));
    if (roll < 4) {
      step.op = '+';
      step.operand = rng.range(2, 59);
    } else if (roll < 7) {
      step.op = '-';
      if (value < 2) {
        step.op = '+';
        step.operand = rng.range(2, 59);
      } else {
        step.operand = rng.range(1, value - 1);
      }
    } else if (roll < 9) {
      step.op = '*';
      step.operand = rng.range(2, 4);
      if (value * step.operand > 5000) {
        step.op = '+';
        step.operand = rng.range(2, 59);
      }
    } else {
      std::vector<std::int64_t> divisors;
      for (std::int64_t d = 2; d <= 12; ++d) {
        if (value % d == 0 && value / d >= 1) divisors.push_back(d);
      }
      if (divisors.empty()) {
        step.op = '-';
        step.operand = value >= 2 ? rng.range(1, value - 1) : 0;
        if (step.operand == 0) {
          step.op = '+';
          step.operand = rng.range(2, 59);
        }
      } else {
        step.op = '/';
        step.operand = rng.pick(divisors);
      }
    }
    value = apply_step(value, step);
    chain.steps.push_back(step);
  }
  (void)answer_min;
  (void)answer_max;
  return chain;
}

}  // namespace

std::int64_t eval_chain(const ArithChain& chain) {
  std::int64_t value = chain.start;
  for (const ArithStep& step : chain.steps) value = apply_step(value, step);
  return value;
}

std::string render_derivation(const ArithChain& chain) {
  std::vector<std::string> out;
  std::int64_t value = chain.start;
  for (const ArithStep& step : chain.steps) {
    const std::int64_t next = apply_step(value, step);
    out.push_back(std::to_string(value) + " " + step.op + " " +
                  std::to_string(step.operand) + " = " + std::to_string(next) +
                  ".");
    value = next;
  }
  out.push_back("Final answer: " + std::to_string(value) + ".");
  return text::join(out, "\n");
}

std::string render_chain(const ArithChain& chain) {
  std::string out = std::to_string(chain.start);
  for (const ArithStep& step : chain.steps) {
    out += "|";
    out += step.op;
    out += std::to_string(step.operand);
  }
  return out;
}

ArithChain parse_chain(const std::string& s) {
  ArithChain chain;
  std::size_t start = 0;
  bool first = true;
  while (start <= s.size()) {
    std::size_t pos = s.find('|', start);
    if (pos == std::string::npos) pos = s.size();
    const std::string part = s.substr(start, pos - start);
    if (part.empty()) {
      throw ContractError("malformed chain serialization: '" + s + "'");
    }
    if (first) {
      chain.start = std::atoll(part.c_str());
      first = false;
    } else {
      ArithStep step;
      step.op = part[0];
      step.operand = std::atoll(part.c_str() + 1);
      chain.steps.push_back(step);
    }
    if (pos == s.size()) break;
    start = pos + 1;
  }
  if (first) throw ContractError("empty chain serialization");
  return chain;
}

std::vector<SourceRecord> gen_math(int n, std::uint64_t seed,
                                   std::int64_t answer_min,
                                   std::int64_t answer_max) {
  if (n < 1) throw ContractError("gen_math: n must be >= 1");
  if (answer_min > answer_max) {
    throw ContractError("gen_math: answer range is empty");
  }
  std::vector<SourceRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    ArithChain chain;
    std::int64_t answer = 0;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
      try {
        chain = sample_chain(rng, answer_min, answer_max);
        answer = eval_chain(chain);
      } catch (const ContractError&) {
        continue;
      }
      if (answer >= answer_min && answer <= answer_max) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ContractError(
          "gen_math: exhausted " + std::to_string(kMaxResamples) +
          " resamples for record " + std::to_string(i) + " within range [" +
          std::to_string(answer_min) + ", " + std::to_string(answer_max) + "]");
    }

    const std::string name = rng.pick(kNames);
    const std::string item = rng.pick(kItems);
    std::vector<std::string> sentences;
    sentences.push_back(name + " starts with " + std::to_string(chain.start) +
                        " " + item + ".");
    for (const ArithStep& step : chain.steps) {
      sentences.push_back(step_sentence(name, item, step, rng));
    }
    sentences.push_back("How many " + item + " does " + name +
                        " have at the end?");

    SourceRecord record;
    record.id = "math-" + std::to_string(seed) + "-" + std::to_string(i);
    record.task = Task::math;
    record.prompt = text::join(sentences, " ");
    record.gold = std::to_string(answer);
    record.meta["chain"] = render_chain(chain);
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace spurlab::corpus
