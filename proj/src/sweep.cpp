#include "steer/sweep.hpp"

#include <cmath>
#include <fstream>

#include "steer/parallel.hpp"

namespace steer {

ConditionRun run_condition(const model::Transformer& model, std::span<const task::Triplet> eval_set,
                           const task::Vocabulary& vocab, const EvalOptions& options, const model::LayerHook* hook) {
  if (eval_set.empty()) throw SteeringError("evaluation set is empty");
  ConditionRun run;
  run.records.resize(eval_set.size());
  parallel_for(eval_set.size(), options.jobs, [&](std::size_t i) {
    const auto& t = eval_set[i];
    model::GenerateOptions go;
    go.max_new = generation_budget(t.target_text);
    go.sampler = sample_sampler(options.seed, "eval.sample", i, options.temperature);
    go.stop_token = task::Vocabulary::kStop;
    go.hook = hook;
    go.tap = options.tap;
    auto& rec = run.records[i];
    rec.result = model::generate(model, task::build_prompt(t, vocab), go);
    rec.reference_sequence = t.reference_sequence;
    rec.target_text = t.target_text;
  });
  return run;
}

namespace {

std::string condition_label(const std::optional<SteeringChoice>& s) {
  if (!s) return "unsteered";
  char buf[64];
  std::snprintf(buf, sizeof buf, "layer%d_alpha%.4f", s->config.layer, s->config.alpha);
  return buf;
}

}  // namespace

eval::EvalRow evaluate_condition(const model::Transformer& model, std::span<const task::Triplet> eval_set,
                                 const task::Vocabulary& vocab, const eval::AttrClassifier& clf,
                                 const EvalOptions& options, const std::optional<SteeringChoice>& steering) {
  std::atomic<long> guard{0};
  std::optional<model::LayerHook> hook;
  if (steering) {
    if (!steering->vector) throw SteeringError("steering choice without a vector");
    hook = make_steering_hook(*steering->vector, steering->config, &guard);
  }
  auto run = run_condition(model, eval_set, vocab, options, hook ? &*hook : nullptr);
  std::optional<int> layer;
  std::optional<double> alpha;
  if (steering) {
    layer = steering->config.layer;
    alpha = steering->config.alpha;
  }
  return eval::summarize(condition_label(steering), layer, alpha, run.records, clf, vocab, guard.load());
}

std::vector<eval::EvalRow> sweep(const model::Transformer& model, const SteeringVectors& vectors,
                                 const SweepGrid& grid, std::span<const task::Triplet> eval_set,
                                 const task::Vocabulary& vocab, const eval::AttrClassifier& clf,
                                 const SweepOptions& options, const std::optional<std::filesystem::path>& csv_path) {
  for (int l : grid.layers) {
    if (!vectors.contains(l)) throw SteeringError("no steering vector for grid layer " + std::to_string(l));
  }
  struct Condition {
    std::optional<int> layer;
    std::optional<double> alpha;
  };
  std::vector<Condition> plan{{std::nullopt, std::nullopt}};
  for (int l : grid.layers) {
    for (double a : grid.alphas) plan.push_back({l, a});
  }

  std::vector<eval::EvalRow> rows;
  if (csv_path && std::filesystem::exists(*csv_path) && std::filesystem::file_size(*csv_path) > 0) {
    rows = eval::read_rows_csv(*csv_path);
    if (rows.size() > plan.size()) throw SteeringError("existing sweep file has more rows than the grid");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const auto& c = plan[i];
      const bool same_alpha =
          r.alpha.has_value() == c.alpha.has_value() && (!c.alpha || std::abs(*r.alpha - *c.alpha) < 5e-5);
      if (r.layer != c.layer || !same_alpha) {
        throw SteeringError("existing sweep file " + csv_path->string() + " does not match the grid at row " +
                            std::to_string(i + 1));
      }
    }
  } else if (csv_path) {
    std::ofstream os(*csv_path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + csv_path->string());
    os << eval::kCsvHeader << '\n';
  }

  std::size_t evaluated = 0;
  for (std::size_t i = rows.size(); i < plan.size(); ++i) {
    if (options.max_new_conditions > 0 && evaluated == options.max_new_conditions) break;
    const auto& c = plan[i];
    std::optional<SteeringChoice> choice;
    if (c.layer) {
      SteerConfig cfg;
      cfg.layer = *c.layer;
      cfg.alpha = *c.alpha;
      cfg.sign = options.sign;
      cfg.epsilon = options.epsilon;
      choice = SteeringChoice{&vectors.at(*c.layer), cfg};
    }
    rows.push_back(evaluate_condition(model, eval_set, vocab, clf, options.eval, choice));
    ++evaluated;
    if (csv_path) {
      std::ofstream os(*csv_path, std::ios::app);
      os << eval::csv_line(rows.back()) << '\n';
      if (!os) throw std::runtime_error("write failed: " + csv_path->string());
    }
  }
  return rows;
}

}  // namespace steer
