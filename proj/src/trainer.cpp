#include "steer/trainer.hpp"

#include <cmath>
#include <numbers>
#include <thread>

namespace steer::model {

double TrainSchedule::lr_at(long step) const {
  if (warmup > 0 && step < warmup) return lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const double span = static_cast<double>(std::max(1L, steps - warmup));
  const double progress = std::clamp(static_cast<double>(step - warmup) / span, 0.0, 1.0);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return lr * (min_lr_ratio + (1.0 - min_lr_ratio) * cosine);
}

double sequence_loss(const Transformer& model, const TrainingSequence& seq, std::vector<Matrix>* grads) {
  if (seq.tokens.size() < 2) throw std::invalid_argument("training sequence needs at least two tokens");
  const std::span<const int> input(seq.tokens.data(), seq.tokens.size() - 1);
  std::vector<int> targets(input.size(), -1);
  for (std::size_t p = static_cast<std::size_t>(std::max(seq.gen_start, 0)); p < input.size(); ++p) {
    targets[p] = seq.tokens[p + 1];
  }
  num::Tape tape;
  std::vector<num::Tensor> leaves;
  model.weights().visit([&](const std::string&, const Matrix& m) { leaves.push_back(tape.leaf(m, grads != nullptr)); });
  auto fwd = model.forward(tape, input, seq.gen_start, {}, nullptr, &leaves);
  num::Tensor loss = num::cross_entropy(fwd.logits, targets);
  if (grads) {
    tape.backward(loss);
    grads->clear();
    for (const auto& leaf : leaves) {
      grads->push_back(leaf.has_grad() ? leaf.grad() : Matrix::Zero(leaf.rows(), leaf.cols()));
    }
  }
  return loss.item();
}

std::vector<std::size_t> batch_indices(std::size_t corpus_size, const TrainSchedule& schedule, long step) {
  if (corpus_size == 0) throw std::invalid_argument("empty corpus");
  const Rng base(schedule.seed, stream_id("trainer.batches"));
  std::vector<std::size_t> out;
  const std::size_t bs = static_cast<std::size_t>(schedule.batch_size);
  std::size_t flat = static_cast<std::size_t>(step) * bs;
  long cached_epoch = -1;
  std::vector<std::size_t> perm;
  for (std::size_t i = 0; i < bs; ++i, ++flat) {
    const long epoch = static_cast<long>(flat / corpus_size);
    if (epoch != cached_epoch) {
      perm.resize(corpus_size);
      for (std::size_t j = 0; j < corpus_size; ++j) perm[j] = j;
      Rng r = base.child(static_cast<std::uint64_t>(epoch));
      r.shuffle(perm);
      cached_epoch = epoch;
    }
    out.push_back(perm[flat % corpus_size]);
  }
  return out;
}

std::vector<LossPoint> train(Transformer& model, TrainState& state, const std::vector<TrainingSequence>& corpus,
                             const TrainSchedule& schedule, const LossCallback& on_log) {
  if (corpus.empty()) throw std::invalid_argument("train: corpus is empty");
  if (schedule.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  for (const auto& s : corpus) {
    if (static_cast<int>(s.tokens.size()) > model.config().max_seq_len + 1) {
      throw std::invalid_argument("train: sequence longer than max_seq_len");
    }
    model.validate_tokens(std::span<const int>(s.tokens.data(), s.tokens.size() - 1));
  }
  if (state.optimizer.m.empty()) {
    const auto flat = model.weights().flatten();
    state.optimizer = num::AdamState::zeros_like(flat);
  }
  std::vector<LossPoint> curve;
  const int jobs = std::max(1, schedule.jobs);
  const long end = schedule.stop_at > 0 ? std::min(schedule.stop_at, schedule.steps) : schedule.steps;
  for (; state.step < end; ++state.step) {
    const long step = state.step;
    const auto idx = batch_indices(corpus.size(), schedule, step);
    std::vector<std::vector<Matrix>> sample_grads(idx.size());
    std::vector<double> sample_loss(idx.size(), 0.0);
    std::vector<std::string> errors(idx.size());
    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t i = begin; i < idx.size(); i += stride) {
        try {
          sample_loss[i] = sequence_loss(model, corpus[idx[i]], &sample_grads[i]);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };
    if (jobs == 1) {
      work(0, 1);
    } else {
      std::vector<std::thread> pool;
      for (int j = 0; j < jobs; ++j) pool.emplace_back(work, static_cast<std::size_t>(j), static_cast<std::size_t>(jobs));
      for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw TrainingDiverged(step, e);
    }
    // Fixed-order reduction keeps results independent of job count.
    std::vector<Matrix> grads = std::move(sample_grads[0]);
    double loss = sample_loss[0];
    for (std::size_t i = 1; i < idx.size(); ++i) {
      for (std::size_t p = 0; p < grads.size(); ++p) grads[p] += sample_grads[i][p];
      loss += sample_loss[i];
    }
    const double inv = 1.0 / static_cast<double>(idx.size());
    loss *= inv;
    if (!std::isfinite(loss)) throw TrainingDiverged(step, "loss is not finite");
    double sq = 0.0;
    for (auto& g : grads) {
      g *= inv;
      sq += g.squaredNorm();
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw TrainingDiverged(step, "gradient is not finite");
    if (schedule.grad_clip > 0.0 && norm > schedule.grad_clip) {
      for (auto& g : grads) g *= schedule.grad_clip / norm;
    }
    if (step == 0 || (schedule.log_every > 0 && step % schedule.log_every == 0) || step + 1 == schedule.steps) {
      LossPoint lp{step, loss};
      curve.push_back(lp);
      if (on_log) on_log(lp);
    }
    auto params = model.weights().flatten();
    num::AdamHyper hyper;
    hyper.lr = schedule.lr_at(step);
    num::adam_step(params, grads, state.optimizer, hyper, step + 1);
    model.weights().unflatten(params);
  }
  return curve;
}

double mean_loss(const Transformer& model, const std::vector<TrainingSequence>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("mean_loss: empty corpus");
  double total = 0.0;
  for (const auto& s : corpus) total += sequence_loss(model, s);
  return total / static_cast<double>(corpus.size());
}

}  // namespace steer::model
