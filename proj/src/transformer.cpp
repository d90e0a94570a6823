#include "steer/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "steer/checkpoint.hpp"

namespace steer::model {

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw std::invalid_argument(std::string("ModelConfig: ") + name + " must be positive");
  };
  positive(n_layers, "n_layers");
  positive(d_model, "d_model");
  positive(n_heads, "n_heads");
  positive(d_ff, "d_ff");
  positive(vocab_size, "vocab_size");
  positive(max_seq_len, "max_seq_len");
  if (d_model % n_heads != 0) throw std::invalid_argument("ModelConfig: d_model must be divisible by n_heads");
  if (head_dim() % 2 != 0) throw std::invalid_argument("ModelConfig: head dimension must be even for rotary");
}

LayerSet all_layers(int n_layers) {
  LayerSet s(static_cast<std::size_t>(n_layers));
  for (int i = 0; i < n_layers; ++i) s[static_cast<std::size_t>(i)] = i;
  return s;
}

std::vector<Matrix> Weights::flatten() const {
  std::vector<Matrix> out;
  visit([&out](const std::string&, const Matrix& m) { out.push_back(m); });
  return out;
}

void Weights::unflatten(std::span<const Matrix> params) {
  std::size_t i = 0;
  visit([&](const std::string& name, Matrix& m) {
    if (i >= params.size()) throw num::DimensionError("Weights::unflatten: too few parameters");
    if (params[i].rows() != m.rows() || params[i].cols() != m.cols()) {
      throw num::DimensionError("Weights::unflatten: shape mismatch for " + name);
    }
    m = params[i++];
  });
  if (i != params.size()) throw num::DimensionError("Weights::unflatten: too many parameters");
}

Transformer::Transformer(ModelConfig config, Weights weights) : config_(config), weights_(std::move(weights)) {
  config_.validate();
  if (static_cast<int>(weights_.blocks.size()) != config_.n_layers) {
    throw num::DimensionError("Transformer: block count does not match n_layers");
  }
  if (weights_.embed.rows() != config_.vocab_size || weights_.embed.cols() != config_.d_model) {
    throw num::DimensionError("Transformer: embedding shape " + num::shape_string(weights_.embed) +
                              " does not match config");
  }
}

Transformer Transformer::init(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed, stream_id("transformer.init"));
  const int d = config.d_model;
  auto gaussian = [&rng](int rows, int cols, double stddev) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
    return m;
  };
  const double proj_std = 0.02 / std::sqrt(2.0 * config.n_layers);
  Weights w;
  w.embed = gaussian(config.vocab_size, d, 0.02);
  for (int l = 0; l < config.n_layers; ++l) {
    BlockWeights b;
    b.attn_norm = Matrix::Ones(1, d);
    b.wq = gaussian(d, d, 0.02);
    b.wk = gaussian(d, d, 0.02);
    b.wv = gaussian(d, d, 0.02);
    b.wo = gaussian(d, d, proj_std);
    b.mlp_norm = Matrix::Ones(1, d);
    b.w1 = gaussian(d, config.d_ff, 0.02);
    b.w2 = gaussian(config.d_ff, d, proj_std);
    w.blocks.push_back(std::move(b));
  }
  w.final_norm = Matrix::Ones(1, d);
  w.unembed = gaussian(d, config.vocab_size, 0.02);
  return Transformer(config, std::move(w));
}

void Transformer::validate_tokens(std::span<const int> tokens) const {
  if (static_cast<int>(tokens.size()) > config_.max_seq_len) {
    throw std::invalid_argument("sequence length " + std::to_string(tokens.size()) + " exceeds max_seq_len " +
                                std::to_string(config_.max_seq_len));
  }
  for (int t : tokens) {
    if (t < 0 || t >= config_.vocab_size) {
      throw std::invalid_argument("token id " + std::to_string(t) + " outside vocabulary of " +
                                  std::to_string(config_.vocab_size));
    }
  }
}

TapedForward Transformer::forward(num::Tape& tape, std::span<const int> tokens, int gen_start, const LayerSet& tap,
                                  const LayerHook* hook, const std::vector<num::Tensor>* leaves) const {
  validate_tokens(tokens);
  if (tokens.empty()) throw std::invalid_argument("forward: empty token sequence");
  if (gen_start < 0 || gen_start > static_cast<int>(tokens.size())) {
    throw std::invalid_argument("forward: gen_start outside sequence");
  }
  if (hook && (hook->layer < 0 || hook->layer >= config_.n_layers)) {
    throw std::invalid_argument("forward: hook layer " + std::to_string(hook->layer) + " out of range");
  }
  std::vector<num::Tensor> own;
  if (!leaves) {
    weights_.visit([&](const std::string&, const Matrix& m) { own.push_back(tape.constant(m)); });
    leaves = &own;
  }
  const auto& w = *leaves;
  const int L = config_.n_layers;
  const int H = config_.n_heads;
  const std::set<int> tapped(tap.begin(), tap.end());

  TapedForward out;
  num::Tensor x = num::embedding(w[0], tokens);
  for (int l = 0; l < L; ++l) {
    const std::size_t base = 1 + 8 * static_cast<std::size_t>(l);
    num::Tensor h = num::rms_norm(x, w[base + 0]);
    num::Tensor q = num::rope(num::matmul(h, w[base + 1]), H);
    num::Tensor k = num::rope(num::matmul(h, w[base + 2]), H);
    num::Tensor v = num::matmul(h, w[base + 3]);
    num::Tensor a = num::causal_attention(q, k, v, H);
    x = num::add(x, num::matmul(a, w[base + 4]));
    num::Tensor h2 = num::rms_norm(x, w[base + 5]);
    x = num::add(x, num::matmul(num::gelu(num::matmul(h2, w[base + 6])), w[base + 7]));
    if (hook && hook->layer == l) x = num::map_rows(x, gen_start, hook->fn);
    if (tapped.contains(l)) {
      const Matrix& xv = x.value();
      for (Eigen::Index p = 0; p < xv.rows(); ++p) {
        out.trace.record(l, static_cast<int>(p), p >= gen_start ? Role::kGenerated : Role::kPrompt, xv.row(p));
      }
    }
  }
  const std::size_t tail = 1 + 8 * static_cast<std::size_t>(L);
  out.logits = num::matmul(num::rms_norm(x, w[tail]), w[tail + 1]);
  return out;
}

std::pair<Matrix, ActivationTrace> Transformer::forward(std::span<const int> tokens, int gen_start, const LayerSet& tap,
                                                        const LayerHook* hook) const {
  num::Tape tape;
  auto f = forward(tape, tokens, gen_start, tap, hook);
  return {f.logits.value(), std::move(f.trace)};
}

// ---- checkpoints ----

namespace {

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"n_layers", c.n_layers}, {"d_model", c.d_model},       {"n_heads", c.n_heads},
          {"d_ff", c.d_ff},         {"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.n_layers = j.at("n_layers").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Transformer& model, const num::AdamState* optimizer,
                     long step) {
  num::TensorFile file;
  nlohmann::json meta;
  meta["kind"] = "transformer";
  meta["config"] = config_to_json(model.config());
  meta["step"] = step;
  meta["has_optimizer"] = optimizer != nullptr;
  file.metadata = meta.dump();
  std::vector<std::string> names;
  model.weights().visit([&](const std::string& name, const Matrix& m) {
    file.tensors.push_back({name, m});
    names.push_back(name);
  });
  if (optimizer) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      file.tensors.push_back({"adam.m." + names[i], optimizer->m.at(i)});
      file.tensors.push_back({"adam.v." + names[i], optimizer->v.at(i)});
    }
  }
  num::save_tensor_file(file, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const num::TensorFile file = num::load_tensor_file(path);
  const auto meta = nlohmann::json::parse(file.metadata);
  if (meta.value("kind", "") != "transformer") throw io::FormatError("not a transformer checkpoint: " + path.string());
  const ModelConfig config = config_from_json(meta.at("config"));
  config.validate();
  Transformer skeleton = Transformer::init(config);
  Weights w = skeleton.weights();
  std::vector<std::string> names;
  w.visit([&](const std::string& name, Matrix& m) {
    const Matrix& stored = file.at(name);
    if (stored.rows() != m.rows() || stored.cols() != m.cols()) {
      throw io::FormatError("checkpoint tensor '" + name + "' has shape " + num::shape_string(stored));
    }
    m = stored;
    names.push_back(name);
  });
  Checkpoint ck{Transformer(config, std::move(w)), std::nullopt, meta.value("step", 0L)};
  if (meta.value("has_optimizer", false)) {
    num::AdamState s;
    for (const auto& n : names) {
      s.m.push_back(file.at("adam.m." + n));
      s.v.push_back(file.at("adam.v." + n));
    }
    ck.optimizer = std::move(s);
  }
  return ck;
}

}  // namespace steer::model
