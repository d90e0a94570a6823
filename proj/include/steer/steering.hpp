#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "steer/decoder.hpp"
#include "steer/synth_task.hpp"

namespace steer {

class SteeringError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct VectorMeta {
  std::size_t n_accented = 0;
  std::size_t n_neutral = 0;
  bool augmented = false;
  std::string checkpoint_digest;
  std::uint64_t seed = 0;
  std::string created;  // empty in timestamp-free runs
};

// v_l, oriented neutral -> accented.
struct SteeringVector {
  int layer = 0;
  num::RowVector values;
  VectorMeta meta;
};

// Keyed by layer index.
using SteeringVectors = std::map<int, SteeringVector>;

enum class SteerSign { kSubtract, kAdd };

std::string to_string(SteerSign sign);
SteerSign sign_from_string(const std::string& s);

struct SteerConfig {
  int layer = 0;
  double alpha = 1.0;
  SteerSign sign = SteerSign::kSubtract;
  double epsilon = 1e-8;

  void validate() const;
};

template <class Plain>
struct SteerOutcome {
  Plain value;
  bool norm_guard = false;
};

// s = a -/+ alpha * v, rescaled to the norm of a. Returns `a` untouched (and
// flags the guard) when a is zero or ||s|| < epsilon * ||a||.
template <class A, class V>
SteerOutcome<typename A::PlainObject> apply_steering(const Eigen::MatrixBase<A>& activation,
                                                     const Eigen::MatrixBase<V>& vector, const SteerConfig& config) {
  using Plain = typename A::PlainObject;
  if (activation.size() != vector.size()) {
    throw SteeringError("apply_steering: activation has " + std::to_string(activation.size()) +
                        " entries, vector has " + std::to_string(vector.size()));
  }
  if (!activation.allFinite()) throw SteeringError("apply_steering: activation is not finite");
  if (config.alpha == 0.0 || (vector.array() == 0.0).all()) return {Plain(activation), false};
  const double a_norm = activation.norm();
  if (a_norm == 0.0) return {Plain(activation), true};
  const double signed_alpha = config.sign == SteerSign::kSubtract ? -config.alpha : config.alpha;
  Plain s = activation + signed_alpha * vector.reshaped(activation.rows(), activation.cols());
  const double s_norm = s.norm();
  if (!(s_norm >= config.epsilon * a_norm) || s_norm == 0.0) return {Plain(activation), true};
  s *= a_norm / s_norm;
  return {std::move(s), false};
}

// Decoding hook for config.layer; increments *guard_events on each guard hit.
model::LayerHook make_steering_hook(const SteeringVector& vector, const SteerConfig& config,
                                    std::atomic<long>* guard_events = nullptr);

// ---- extraction ----

struct ExtractOptions {
  model::LayerSet layers;
  bool augment = false;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  double kappa = 20.0;
  double gate_threshold = 0.3;
  int jobs = 1;
  std::string checkpoint_digest;
  std::string created;
};

// Per-sample token-means over generated positions, per tapped layer.
struct SampleActivation {
  bool ok = false;
  std::map<int, num::RowVector> means;
};

// Generation budget for a target of n words (rendered length 2n + 1).
int generation_budget(const task::Sentence& target_text);

// Sampling seed shared by every condition for sample index i.
model::Sampler sample_sampler(std::uint64_t seed, std::string_view purpose, std::size_t index, double temperature);

// Generates every triplet (sample i draws from child stream i) and reduces its
// trace to per-layer generated-position means. Reference augmentation uses the
// speaker's timbre profile as the base distribution.
std::vector<SampleActivation> collect_sample_activations(const model::Transformer& model,
                                                         std::span<const task::Triplet> triplets,
                                                         std::span<const task::SpeakerProfile> speakers,
                                                         const task::Vocabulary& vocab, const ExtractOptions& options);

struct ConditionMeans {
  std::map<int, num::RowVector> mean;
  std::size_t count = 0;
};

// Mean over successful samples in index order. Throws naming `condition` when
// no sample succeeded.
ConditionMeans condition_means(std::span<const SampleActivation> samples, const model::LayerSet& layers,
                               const std::string& condition);

// v_l = mean(accented) - mean(neutral), per layer.
SteeringVectors difference_of_means(std::span<const SampleActivation> accented,
                                    std::span<const SampleActivation> neutral, const model::LayerSet& layers);

SteeringVectors extract_vectors(const model::Transformer& model, std::span<const task::Triplet> accented,
                                std::span<const task::Triplet> neutral, std::span<const task::SpeakerProfile> speakers,
                                const task::Vocabulary& vocab, const ExtractOptions& options);

// ---- persistence ----

inline constexpr std::uint32_t kVectorFormatVersion = 1;

void save_vectors(const SteeringVectors& vectors, const std::filesystem::path& path);
SteeringVectors load_vectors(const std::filesystem::path& path);
std::string vectors_to_json(const SteeringVectors& vectors);

// Throws on a d_model mismatch; returns a warning when the recorded checkpoint
// digest differs from `checkpoint_digest`.
std::optional<std::string> check_compatible(const SteeringVectors& vectors, int d_model,
                                            const std::string& checkpoint_digest);

}  // namespace steer
