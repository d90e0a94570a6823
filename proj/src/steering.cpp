#include "steer/steering.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "steer/binary_io.hpp"
#include "steer/parallel.hpp"

namespace steer {

std::string to_string(SteerSign sign) { return sign == SteerSign::kSubtract ? "subtract" : "add"; }

SteerSign sign_from_string(const std::string& s) {
  if (s == "subtract") return SteerSign::kSubtract;
  if (s == "add") return SteerSign::kAdd;
  throw SteeringError("unknown steering direction '" + s + "' (expected subtract or add)");
}

void SteerConfig::validate() const {
  if (layer < 0) throw SteeringError("steering layer must be non-negative");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw SteeringError("steering alpha must be finite and >= 0");
  if (!(epsilon >= 0.0)) throw SteeringError("norm-guard epsilon must be >= 0");
}

model::LayerHook make_steering_hook(const SteeringVector& vector, const SteerConfig& config,
                                    std::atomic<long>* guard_events) {
  config.validate();
  if (vector.layer != config.layer) {
    throw SteeringError("steering vector is for layer " + std::to_string(vector.layer) + ", config targets layer " +
                        std::to_string(config.layer));
  }
  model::LayerHook hook;
  hook.layer = config.layer;
  hook.fn = [values = vector.values, config, guard_events](const num::RowVector& a) {
    auto out = apply_steering(a, values, config);
    if (out.norm_guard && guard_events) guard_events->fetch_add(1, std::memory_order_relaxed);
    return std::move(out.value);
  };
  return hook;
}

// ---- extraction ----

int generation_budget(const task::Sentence& target_text) { return 4 * static_cast<int>(target_text.size()) + 4; }

model::Sampler sample_sampler(std::uint64_t seed, std::string_view purpose, std::size_t index, double temperature) {
  Rng r = Rng(seed, stream_id(purpose)).child(index);
  return model::Sampler::with_temperature(temperature, r.next_u64(), r.next_u64());
}

namespace {

const task::SpeakerProfile& speaker_for(std::span<const task::SpeakerProfile> speakers, int id) {
  for (const auto& s : speakers) {
    if (s.speaker_id == id) return s;
  }
  throw SteeringError("no profile for speaker " + std::to_string(id));
}

void check_layers(const model::LayerSet& layers, int n_layers) {
  if (layers.empty()) throw SteeringError("no layers requested");
  for (int l : layers) {
    if (l < 0 || l >= n_layers) {
      throw SteeringError("layer " + std::to_string(l) + " out of range [0, " + std::to_string(n_layers) + ")");
    }
  }
}

}  // namespace

std::vector<SampleActivation> collect_sample_activations(const model::Transformer& model,
                                                         std::span<const task::Triplet> triplets,
                                                         std::span<const task::SpeakerProfile> speakers,
                                                         const task::Vocabulary& vocab, const ExtractOptions& options) {
  check_layers(options.layers, model.config().n_layers);
  std::vector<SampleActivation> out(triplets.size());
  parallel_for(triplets.size(), options.jobs, [&](std::size_t i) {
    const auto& t = triplets[i];
    std::vector<int> reference = t.reference_sequence;
    if (options.augment) {
      Rng aug = Rng(options.seed, stream_id("extract.augment")).child(i);
      const auto& profile = speaker_for(speakers, t.speaker_id);
      reference = task::perturb_reference(reference, profile.timbre_dist, options.kappa, vocab, aug,
                                          options.gate_threshold)
                      .sequence;
    }
    const auto prompt = task::build_prompt(t, reference, vocab);
    model::GenerateOptions go;
    go.max_new = generation_budget(t.target_text);
    go.sampler = sample_sampler(options.seed, "extract.sample", i, options.temperature);
    go.stop_token = task::Vocabulary::kStop;
    go.tap = options.layers;
    const auto result = model::generate(model, prompt, go);
    SampleActivation& s = out[i];
    s.ok = result.ok();
    if (!s.ok) return;
    for (int l : options.layers) {
      auto m = result.trace->generated_mean(l);
      if (!m) throw SteeringError("sample " + std::to_string(i) + " has no generated positions");
      s.means.emplace(l, std::move(*m));
    }
  });
  return out;
}

ConditionMeans condition_means(std::span<const SampleActivation> samples, const model::LayerSet& layers,
                               const std::string& condition) {
  ConditionMeans cm;
  for (const auto& s : samples) {
    if (!s.ok) continue;
    for (int l : layers) {
      const auto it = s.means.find(l);
      if (it == s.means.end()) throw SteeringError("sample is missing layer " + std::to_string(l));
      auto [slot, inserted] = cm.mean.try_emplace(l, it->second);
      if (!inserted) slot->second += it->second;
    }
    ++cm.count;
  }
  if (cm.count == 0) throw SteeringError("extraction failed: every " + condition + " sample failed to generate");
  for (auto& [l, v] : cm.mean) v /= static_cast<double>(cm.count);
  return cm;
}

SteeringVectors difference_of_means(std::span<const SampleActivation> accented,
                                    std::span<const SampleActivation> neutral, const model::LayerSet& layers) {
  const auto acc = condition_means(accented, layers, "accented");
  const auto neu = condition_means(neutral, layers, "neutral");
  SteeringVectors out;
  for (int l : layers) {
    SteeringVector v;
    v.layer = l;
    v.values = acc.mean.at(l) - neu.mean.at(l);
    v.meta.n_accented = acc.count;
    v.meta.n_neutral = neu.count;
    out.emplace(l, std::move(v));
  }
  return out;
}

SteeringVectors extract_vectors(const model::Transformer& model, std::span<const task::Triplet> accented,
                                std::span<const task::Triplet> neutral, std::span<const task::SpeakerProfile> speakers,
                                const task::Vocabulary& vocab, const ExtractOptions& options) {
  if (accented.empty()) throw SteeringError("extraction needs at least one accented triplet");
  if (neutral.empty()) throw SteeringError("extraction needs at least one neutral triplet");
  check_layers(options.layers, model.config().n_layers);
  const auto acc = collect_sample_activations(model, accented, speakers, vocab, options);
  const auto neu = collect_sample_activations(model, neutral, speakers, vocab, options);
  auto vectors = difference_of_means(acc, neu, options.layers);
  for (auto& [l, v] : vectors) {
    v.meta.augmented = options.augment;
    v.meta.checkpoint_digest = options.checkpoint_digest;
    v.meta.seed = options.seed;
    v.meta.created = options.created;
  }
  return vectors;
}

// ---- persistence ----

namespace {

nlohmann::json meta_json(const VectorMeta& m) {
  return {{"n_accented", m.n_accented}, {"n_neutral", m.n_neutral},
          {"augmented", m.augmented},   {"checkpoint_digest", m.checkpoint_digest},
          {"seed", m.seed},             {"created", m.created}};
}

VectorMeta meta_from_json(const nlohmann::json& j) {
  VectorMeta m;
  m.n_accented = j.at("n_accented").get<std::size_t>();
  m.n_neutral = j.at("n_neutral").get<std::size_t>();
  m.augmented = j.at("augmented").get<bool>();
  m.checkpoint_digest = j.at("checkpoint_digest").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.created = j.at("created").get<std::string>();
  return m;
}

int common_d_model(const SteeringVectors& vectors) {
  if (vectors.empty()) throw SteeringError("no steering vectors");
  const auto d = vectors.begin()->second.values.size();
  for (const auto& [l, v] : vectors) {
    if (v.layer != l) throw SteeringError("steering vector keyed by layer " + std::to_string(l) + " claims layer " +
                                          std::to_string(v.layer));
    if (v.values.size() != d) throw SteeringError("steering vectors have inconsistent dimensions");
  }
  return static_cast<int>(d);
}

}  // namespace

void save_vectors(const SteeringVectors& vectors, const std::filesystem::path& path) {
  const int d = common_d_model(vectors);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.write("STVF", 4);
  io::write_le<std::uint32_t>(os, kVectorFormatVersion);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(vectors.size()));
  for (const auto& [l, v] : vectors) {
    io::write_le<std::int32_t>(os, l);
    io::write_string(os, meta_json(v.meta).dump());
    for (Eigen::Index i = 0; i < v.values.size(); ++i) io::write_le<double>(os, v.values[i]);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

SteeringVectors load_vectors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "STVF") {
    throw io::FormatError("not a steering-vector file: " + path.string());
  }
  const auto version = io::read_le<std::uint32_t>(is, "format_version");
  if (version != kVectorFormatVersion) {
    throw io::FormatError("steering-vector file version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kVectorFormatVersion) + ")");
  }
  const auto d = io::read_le<std::uint32_t>(is, "d_model");
  const auto count = io::read_le<std::uint32_t>(is, "layer_count");
  if (d == 0 || d > (1u << 20) || count == 0 || count > 4096) throw io::FormatError("implausible steering-vector header");
  SteeringVectors out;
  for (std::uint32_t k = 0; k < count; ++k) {
    SteeringVector v;
    v.layer = io::read_le<std::int32_t>(is, "layer index");
    try {
      v.meta = meta_from_json(nlohmann::json::parse(io::read_string(is, "metadata")));
    } catch (const nlohmann::json::exception& e) {
      throw io::FormatError(std::string("corrupt steering-vector metadata: ") + e.what());
    }
    v.values.resize(d);
    for (std::uint32_t i = 0; i < d; ++i) v.values[i] = io::read_le<double>(is, "vector data");
    if (!out.emplace(v.layer, std::move(v)).second) throw io::FormatError("duplicate layer in steering-vector file");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw io::FormatError("trailing bytes in steering-vector file");
  return out;
}

std::string vectors_to_json(const SteeringVectors& vectors) {
  nlohmann::json j;
  j["format_version"] = kVectorFormatVersion;
  j["d_model"] = common_d_model(vectors);
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& [l, v] : vectors) {
    layers.push_back({{"layer", l},
                      {"meta", meta_json(v.meta)},
                      {"norm", v.values.norm()},
                      {"values", std::vector<double>(v.values.data(), v.values.data() + v.values.size())}});
  }
  j["layers"] = layers;
  return j.dump(2);
}

std::optional<std::string> check_compatible(const SteeringVectors& vectors, int d_model,
                                            const std::string& checkpoint_digest) {
  const int d = common_d_model(vectors);
  if (d != d_model) {
    throw SteeringError("steering vectors have d_model " + std::to_string(d) + " but the model has " +
                        std::to_string(d_model));
  }
  for (const auto& [l, v] : vectors) {
    if (v.meta.checkpoint_digest != checkpoint_digest) {
      return "steering vectors were extracted from checkpoint " + v.meta.checkpoint_digest +
             ", loading against " + checkpoint_digest;
    }
  }
  return std::nullopt;
}

}  // namespace steer
