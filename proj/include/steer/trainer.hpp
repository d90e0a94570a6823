#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "steer/transformer.hpp"

namespace steer::model {

// A training sequence; next-token loss is taken on logits at positions
// >= gen_start (the generation-start marker and everything after it).
struct TrainingSequence {
  std::vector<int> tokens;
  int gen_start = 0;
};

struct TrainSchedule {
  double lr = 3e-3;
  double min_lr_ratio = 0.1;
  long warmup = 100;
  long steps = 6000;
  int batch_size = 16;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;
  long log_every = 50;
  int jobs = 1;
  // Halt after this many completed updates (0 = run to `steps`). The learning
  // rate schedule still spans `steps`.
  long stop_at = 0;

  // Linear warmup then cosine decay to lr * min_lr_ratio.
  double lr_at(long step) const;
};

struct LossPoint {
  long step = 0;
  double loss = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(long step, const std::string& what)
      : std::runtime_error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

struct TrainState {
  num::AdamState optimizer;
  long step = 0;  // completed updates
};

// Mean cross-entropy of one sequence; gradients (Weights::visit order) are
// written to `grads` when non-null.
double sequence_loss(const Transformer& model, const TrainingSequence& seq, std::vector<Matrix>* grads = nullptr);

// Deterministic batch composition: epoch-wise permutations of the corpus
// drawn from (seed, epoch), consumed batch_size at a time.
std::vector<std::size_t> batch_indices(std::size_t corpus_size, const TrainSchedule& schedule, long step);

using LossCallback = std::function<void(const LossPoint&)>;

// Runs updates state.step .. schedule.steps - 1. Returns logged losses (the
// pre-update batch loss every log_every steps, plus step 0 and the last).
std::vector<LossPoint> train(Transformer& model, TrainState& state, const std::vector<TrainingSequence>& corpus,
                             const TrainSchedule& schedule, const LossCallback& on_log = {});

double mean_loss(const Transformer& model, const std::vector<TrainingSequence>& corpus);

}  // namespace steer::model
