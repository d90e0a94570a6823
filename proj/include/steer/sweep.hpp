#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "steer/eval.hpp"
#include "steer/steering.hpp"

namespace steer {

struct EvalOptions {
  std::uint64_t seed = 0;
  double temperature = 1.0;
  int jobs = 1;
  model::LayerSet tap;  // layers recorded in each result's trace
};

struct ConditionRun {
  std::vector<eval::GenerationRecord> records;
  long norm_guard_events = 0;
};

// Generates every eval triplet. Sample i uses the same sampling stream in
// every condition, so alpha = 0 reproduces the unsteered run exactly.
ConditionRun run_condition(const model::Transformer& model, std::span<const task::Triplet> eval_set,
                           const task::Vocabulary& vocab, const EvalOptions& options,
                           const model::LayerHook* hook = nullptr);

// Unsteered when `steering` is empty.
struct SteeringChoice {
  const SteeringVector* vector = nullptr;
  SteerConfig config;
};

eval::EvalRow evaluate_condition(const model::Transformer& model, std::span<const task::Triplet> eval_set,
                                 const task::Vocabulary& vocab, const eval::AttrClassifier& clf,
                                 const EvalOptions& options, const std::optional<SteeringChoice>& steering);

struct SweepGrid {
  model::LayerSet layers;
  std::vector<double> alphas{1.0, 2.0};
};

struct SweepOptions {
  EvalOptions eval;
  SteerSign sign = SteerSign::kSubtract;
  double epsilon = 1e-8;
  // Stop after this many newly evaluated conditions (0 = no limit).
  std::size_t max_new_conditions = 0;
};

// Baseline row then one row per (layer, alpha), layer-major. When csv_path is
// given, rows already present there are kept and only the remaining
// conditions are evaluated and appended one line at a time.
std::vector<eval::EvalRow> sweep(const model::Transformer& model, const SteeringVectors& vectors,
                                 const SweepGrid& grid, std::span<const task::Triplet> eval_set,
                                 const task::Vocabulary& vocab, const eval::AttrClassifier& clf,
                                 const SweepOptions& options, const std::optional<std::filesystem::path>& csv_path);

}  // namespace steer
