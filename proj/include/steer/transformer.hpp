#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "steer/adam.hpp"
#include "steer/rng.hpp"
#include "steer/tensor.hpp"
#include "steer/trace.hpp"

namespace steer::model {

using num::Matrix;
using num::RowVector;

struct ModelConfig {
  int n_layers = 4;
  int d_model = 64;
  int n_heads = 4;
  int d_ff = 256;
  int vocab_size = 212;
  int max_seq_len = 256;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on inconsistent sizes.
  void validate() const;
  int head_dim() const { return d_model / n_heads; }
};

struct BlockWeights {
  Matrix attn_norm;  // (1, d)
  Matrix wq, wk, wv, wo;  // (d, d)
  Matrix mlp_norm;  // (1, d)
  Matrix w1;  // (d, ff)
  Matrix w2;  // (ff, d)
};

struct Weights {
  Matrix embed;  // (vocab, d)
  std::vector<BlockWeights> blocks;
  Matrix final_norm;  // (1, d)
  Matrix unembed;  // (d, vocab)

  // Visits every parameter in a fixed order with its checkpoint name.
  template <typename F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <typename F>
  void visit(F&& f) const { visit_impl(*this, f); }

  std::vector<Matrix> flatten() const;
  void unflatten(std::span<const Matrix> params);

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    f(std::string("embed"), self.embed);
    for (std::size_t l = 0; l < self.blocks.size(); ++l) {
      const std::string p = "blocks." + std::to_string(l) + ".";
      auto& b = self.blocks[l];
      f(p + "attn_norm", b.attn_norm);
      f(p + "wq", b.wq);
      f(p + "wk", b.wk);
      f(p + "wv", b.wv);
      f(p + "wo", b.wo);
      f(p + "mlp_norm", b.mlp_norm);
      f(p + "w1", b.w1);
      f(p + "w2", b.w2);
    }
    f(std::string("final_norm"), self.final_norm);
    f(std::string("unembed"), self.unembed);
  }
};

// Replaces the block-`layer` output of a generated position before it feeds
// block layer + 1.
struct LayerHook {
  int layer = 0;
  std::function<RowVector(const RowVector&)> fn;
};

// Sorted, de-duplicated layer indices.
using LayerSet = std::vector<int>;
LayerSet all_layers(int n_layers);

struct TapedForward {
  num::Tensor logits;  // (T, vocab)
  ActivationTrace trace;
};

// Pre-norm decoder-only transformer with rotary positions and an untied
// output head. Weights are plain Eigen matrices; forward builds a fresh tape.
class Transformer {
 public:
  Transformer() = default;
  Transformer(ModelConfig config, Weights weights);

  // Gaussian(0, 0.02) init from config.seed; residual output projections are
  // scaled by 1/sqrt(2 * n_layers); norm gains start at 1.
  static Transformer init(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const Weights& weights() const { return weights_; }
  Weights& weights() { return weights_; }

  // Full-sequence forward. Positions >= gen_start are labeled generated; the
  // hook (if any) rewrites only those rows. `leaves`, when given, supplies the
  // taped parameter leaves in Weights::visit order (training path).
  TapedForward forward(num::Tape& tape, std::span<const int> tokens, int gen_start, const LayerSet& tap,
                       const LayerHook* hook = nullptr, const std::vector<num::Tensor>* leaves = nullptr) const;

  // Convenience: untaped logits + trace.
  std::pair<Matrix, ActivationTrace> forward(std::span<const int> tokens, int gen_start, const LayerSet& tap,
                                             const LayerHook* hook = nullptr) const;

  void validate_tokens(std::span<const int> tokens) const;

 private:
  ModelConfig config_;
  Weights weights_;
};

// ---- checkpoints ----

struct Checkpoint {
  Transformer model;
  std::optional<num::AdamState> optimizer;
  long step = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Transformer& model,
                     const num::AdamState* optimizer = nullptr, long step = 0);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace steer::model
