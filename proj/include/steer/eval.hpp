#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "steer/decoder.hpp"
#include "steer/synth_task.hpp"

namespace steer::eval {

class EvalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class AccentClass { kNeutral, kAccented };

// Decision on the accented-variant fraction of a surface sequence.
struct AttrClassifier {
  enum class Kind { kThreshold, kLogistic };
  Kind kind = Kind::kThreshold;
  double threshold = 0.5;
  double weight = 0.0;
  double bias = 0.0;

  static AttrClassifier with_threshold(double t) { return {Kind::kThreshold, t, 0.0, 0.0}; }

  AccentClass decide(double accented_fraction) const;
  // nullopt for sequences without content tokens.
  std::optional<AccentClass> classify(std::span<const int> sequence, const task::Vocabulary& vocab) const;

  std::string to_json() const;
  static AttrClassifier from_json(const std::string& text);
};

struct LabeledSequence {
  std::vector<int> surface;
  AccentClass label = AccentClass::kNeutral;
};

struct ClassifierFit {
  AttrClassifier classifier;
  double heldout_accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_heldout = 0;
};

// Ridge-regularized logistic regression on the accented fraction, fitted by
// Newton iterations on a seeded 80/20 split.
ClassifierFit train_attr_classifier(std::span<const LabeledSequence> corpus, std::uint64_t seed,
                                    const task::Vocabulary& vocab);

double isr(std::span<const model::GenerationResult> results);

struct AmrResult {
  double rate = 0.0;
  std::size_t matched = 0;
  std::size_t total = 0;
  std::size_t malformed = 0;
};

AmrResult amr(std::span<const std::vector<int>> sequences, const AttrClassifier& clf, AccentClass target,
              const task::Vocabulary& vocab);

// L2-normalized timbre histogram.
std::vector<double> speaker_embedding(std::span<const int> sequence, const task::Vocabulary& vocab);
double cosine_sim(std::span<const double> a, std::span<const double> b);

// Levenshtein distance / len(ref) over canonical words.
double content_error_rate(std::span<const int> hyp, std::span<const int> ref);

struct EvalRow {
  std::string label;
  std::optional<int> layer;
  std::optional<double> alpha;
  double isr = 0.0;
  double amr_accented = 0.0;
  double amr_neutral = 0.0;
  double spk_sim = 0.0;
  double cer = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_success = 0;
  long norm_guard_events = 0;

  bool is_baseline() const { return !layer.has_value(); }
};

// Folds one condition's generations into a row. ISR uses every attempt;
// all other metrics use successful generations only.
struct GenerationRecord {
  model::GenerationResult result;
  std::vector<int> reference_sequence;
  task::Sentence target_text;
};

EvalRow summarize(std::string label, std::optional<int> layer, std::optional<double> alpha,
                  std::span<const GenerationRecord> records, const AttrClassifier& clf, const task::Vocabulary& vocab,
                  long norm_guard_events = 0);

// ---- reporting ----

inline constexpr const char* kCsvHeader = "layer,alpha,isr,amr_accented,amr_neutral,spk_sim,cer,norm_guard_events";

std::string csv_line(const EvalRow& row);
EvalRow parse_csv_line(const std::string& line);
std::vector<EvalRow> read_rows_csv(const std::filesystem::path& path);
// Baseline rows first, then by (layer, alpha); stable otherwise.
std::vector<EvalRow> ordered_rows(std::vector<EvalRow> rows);
void write_rows_csv(const std::vector<EvalRow>& rows, const std::filesystem::path& path);

struct ReportMeta {
  std::uint64_t seed = 0;
  std::string checkpoint_digest;
  std::string vectors_digest;
};

// CSV plus a JSON summary with per-condition rows, layerwise series per
// alpha, and provenance metadata.
void report(const std::vector<EvalRow>& rows, const std::filesystem::path& csv_path,
            const std::filesystem::path& json_path, const ReportMeta& meta);

}  // namespace steer::eval
