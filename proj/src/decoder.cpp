#include "steer/decoder.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace steer::model {

int sample_token(const RowVector& logits, const Sampler& sampler, Rng& rng) {
  if (sampler.kind == Sampler::Kind::kGreedy) {
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    return static_cast<int>(best);
  }
  if (!(sampler.temperature > 0.0)) throw std::invalid_argument("sampler temperature must be positive");
  const RowVector probs = num::softmax_rows(logits / sampler.temperature);
  return static_cast<int>(rng.categorical(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size()))));
}

DecodeSession::DecodeSession(const Transformer& model) : model_(&model) {
  const auto& c = model.config();
  keys_.assign(static_cast<std::size_t>(c.n_layers), Matrix(c.max_seq_len, c.d_model));
  values_.assign(static_cast<std::size_t>(c.n_layers), Matrix(c.max_seq_len, c.d_model));
}

RowVector DecodeSession::step(int token, Role role, const LayerHook* hook, const LayerSet& tap,
                              ActivationTrace* trace) {
  const auto& c = model_->config();
  const auto& w = model_->weights();
  if (position_ >= c.max_seq_len) throw std::out_of_range("DecodeSession: context full");
  if (token < 0 || token >= c.vocab_size) throw std::invalid_argument("DecodeSession: token id out of range");
  if (hook && (hook->layer < 0 || hook->layer >= c.n_layers)) {
    throw std::invalid_argument("DecodeSession: hook layer " + std::to_string(hook->layer) + " out of range");
  }
  const Eigen::Index hd = c.head_dim();
  const Eigen::Index n = position_ + 1;
  RowVector x = w.embed.row(token);
  for (int l = 0; l < c.n_layers; ++l) {
    const auto& b = w.blocks[static_cast<std::size_t>(l)];
    auto& K = keys_[static_cast<std::size_t>(l)];
    auto& V = values_[static_cast<std::size_t>(l)];
    const Matrix h = num::rms_norm_rows(x, b.attn_norm);
    Matrix q = h * b.wq;
    Matrix k = h * b.wk;
    num::rope_rows_inplace(q, c.n_heads, position_);
    num::rope_rows_inplace(k, c.n_heads, position_);
    K.row(position_) = k.row(0);
    V.row(position_) = (h * b.wv).row(0);
    RowVector attn(c.d_model);
    for (int hh = 0; hh < c.n_heads; ++hh) {
      attn.segment(hh * hd, hd) = num::attend_row(q.row(0).segment(hh * hd, hd),
                                                  K.topRows(n).middleCols(hh * hd, hd),
                                                  V.topRows(n).middleCols(hh * hd, hd));
    }
    x += attn * b.wo;
    const Matrix h2 = num::rms_norm_rows(x, b.mlp_norm);
    x += num::gelu_rows(h2 * b.w1) * b.w2;
    if (hook && hook->layer == l && role == Role::kGenerated) {
      RowVector steered = hook->fn(x);
      if (steered.cols() != x.cols()) throw num::DimensionError("hook changed hidden width");
      x = std::move(steered);
    }
    if (!x.allFinite()) {
      throw num::NumericError("non-finite hidden state at layer " + std::to_string(l) + ", position " +
                              std::to_string(position_));
    }
    if (trace && std::find(tap.begin(), tap.end(), l) != tap.end()) trace->record(l, position_, role, x);
  }
  ++position_;
  return num::rms_norm_rows(x, w.final_norm) * w.unembed;
}

namespace {

void check_options(const Transformer& model, std::span<const int> prompt, const GenerateOptions& options) {
  if (prompt.empty()) throw std::invalid_argument("generate: prompt must be non-empty");
  if (options.max_new < 1) throw std::invalid_argument("generate: max_new must be >= 1");
  model.validate_tokens(prompt);
  const int n_layers = model.config().n_layers;
  if (options.hook && (options.hook->layer < 0 || options.hook->layer >= n_layers)) {
    throw std::invalid_argument("generate: hook layer " + std::to_string(options.hook->layer) + " >= n_layers " +
                                std::to_string(n_layers));
  }
  for (int l : options.tap) {
    if (l < 0 || l >= n_layers) throw std::invalid_argument("generate: tap layer out of range");
  }
}

}  // namespace

GenerationResult generate(const Transformer& model, std::span<const int> prompt, const GenerateOptions& options) {
  check_options(model, prompt, options);
  const int gen_start = static_cast<int>(prompt.size()) - 1;
  const int capacity = model.config().max_seq_len;
  Rng rng(options.sampler.seed, options.sampler.stream);
  DecodeSession session(model);
  GenerationResult result;
  ActivationTrace trace;
  ActivationTrace* tp = options.tap.empty() ? nullptr : &trace;
  for (int p = 0; p < gen_start; ++p) session.step(prompt[static_cast<std::size_t>(p)], Role::kPrompt, nullptr, options.tap, tp);
  int next = prompt.back();
  for (;;) {
    const RowVector logits = session.step(next, Role::kGenerated, options.hook, options.tap, tp);
    next = sample_token(logits, options.sampler, rng);
    ++result.steps_used;
    if (next == options.stop_token) {
      result.status = GenerationStatus::kOk;
      break;
    }
    result.tokens.push_back(next);
    if (result.steps_used >= options.max_new || session.position() >= capacity) break;
  }
  if (tp) result.trace = std::move(trace);
  return result;
}

GenerationResult generate_full_recompute(const Transformer& model, std::span<const int> prompt,
                                         const GenerateOptions& options) {
  check_options(model, prompt, options);
  const int gen_start = static_cast<int>(prompt.size()) - 1;
  const int capacity = model.config().max_seq_len;
  Rng rng(options.sampler.seed, options.sampler.stream);
  std::vector<int> context(prompt.begin(), prompt.end());
  GenerationResult result;
  for (;;) {
    auto [logits, trace] = model.forward(context, gen_start, options.tap, options.hook);
    const int next = sample_token(logits.bottomRows(1), options.sampler, rng);
    ++result.steps_used;
    bool done = false;
    if (next == options.stop_token) {
      result.status = GenerationStatus::kOk;
      done = true;
    } else {
      result.tokens.push_back(next);
      done = result.steps_used >= options.max_new || static_cast<int>(context.size()) >= capacity;
    }
    if (done) {
      if (!options.tap.empty()) result.trace = std::move(trace);
      break;
    }
    context.push_back(next);
  }
  return result;
}

}  // namespace steer::model
