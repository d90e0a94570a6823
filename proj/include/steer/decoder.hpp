#pragma once

#include <optional>
#include <span>
#include <vector>

#include "steer/transformer.hpp"

namespace steer::model {

struct Sampler {
  enum class Kind { kGreedy, kTemperature };
  Kind kind = Kind::kGreedy;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  static Sampler greedy() { return {}; }
  static Sampler with_temperature(double temperature, std::uint64_t seed, std::uint64_t stream = 0) {
    return {Kind::kTemperature, temperature, seed, stream};
  }
};

// Picks the next token from a logits row. Greedy ties resolve to the lowest id.
int sample_token(const RowVector& logits, const Sampler& sampler, Rng& rng);

enum class GenerationStatus { kOk, kBudgetExhausted };

struct GenerateOptions {
  int max_new = 1;
  Sampler sampler;
  int stop_token = 0;
  const LayerHook* hook = nullptr;
  LayerSet tap;
};

struct GenerationResult {
  std::vector<int> tokens;  // emitted ids, stop token excluded
  GenerationStatus status = GenerationStatus::kBudgetExhausted;
  std::optional<ActivationTrace> trace;
  int steps_used = 0;  // sampled tokens, stop token included

  bool ok() const { return status == GenerationStatus::kOk; }
};

// Incremental single-sequence decoder. Owns its per-layer key/value cache;
// the model is shared read-only.
class DecodeSession {
 public:
  explicit DecodeSession(const Transformer& model);

  // Runs one position through every block and returns its logits row. The
  // hook fires only for generated positions.
  RowVector step(int token, Role role, const LayerHook* hook = nullptr, const LayerSet& tap = {},
                 ActivationTrace* trace = nullptr);

  int position() const { return position_; }

 private:
  const Transformer* model_;
  std::vector<Matrix> keys_;
  std::vector<Matrix> values_;
  int position_ = 0;
};

// Autoregressive generation. The last prompt token is the generation-start
// marker: positions before it are prefilled as prompt, and the marker plus
// every emitted token are decoded as generated positions (steered and
// averaged). Stops on the stop token or after max_new tokens.
GenerationResult generate(const Transformer& model, std::span<const int> prompt, const GenerateOptions& options);

// Reference decoder that re-runs the full taped forward over the whole
// context at every step (no cache). Same contract as generate().
GenerationResult generate_full_recompute(const Transformer& model, std::span<const int> prompt,
                                         const GenerateOptions& options);

}  // namespace steer::model
