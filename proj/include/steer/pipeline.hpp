#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "steer/eval.hpp"
#include "steer/trainer.hpp"
#include "steer/synth_task.hpp"

namespace steer {

// Prompt followed by the rendered target; loss starts at the GEN marker.
model::TrainingSequence training_sequence(const task::Triplet& triplet, const task::Vocabulary& vocab);
std::vector<model::TrainingSequence> training_sequences(const std::vector<task::Triplet>& triplets,
                                                        const task::Vocabulary& vocab);

// Speakers 0..n-1 are native, n..2n-1 accented (n = speakers_per_condition).
std::vector<task::SpeakerProfile> all_speakers(const task::TaskConfig& config);
std::vector<task::SpeakerProfile> native_speakers(const task::TaskConfig& config);
std::vector<task::SpeakerProfile> accented_speakers(const task::TaskConfig& config);

struct CorpusSizes {
  int n_sentences = 2000;
  double eval_fraction = 0.1;
  int n_train = 20000;
  int n_extract = 4000;  // per condition
  int n_eval = 200;      // per condition
  int n_classifier = 1000;  // utterances per condition

  void validate() const;
};

struct Corpus {
  task::SentencePool pool;
  std::vector<task::Triplet> train;
  std::vector<task::Triplet> extract_accented;
  std::vector<task::Triplet> extract_neutral;
  std::vector<task::Triplet> eval_accented;
  std::vector<task::Triplet> eval_neutral;
  std::vector<eval::LabeledSequence> classifier_corpus;
  std::vector<int> classifier_speakers;
};

// Every draw derives from (seed, named stream).
Corpus generate_corpus(const task::TaskConfig& config, const CorpusSizes& sizes, std::uint64_t seed);

// On-disk layout of a corpus directory.
struct CorpusFiles {
  std::filesystem::path dir;

  std::filesystem::path task() const { return dir / "task.json"; }
  std::filesystem::path utterances() const { return dir / "corpus.jsonl"; }
  std::filesystem::path train() const { return dir / "train.jsonl"; }
  std::filesystem::path extract_accented() const { return dir / "extract_accented.jsonl"; }
  std::filesystem::path extract_neutral() const { return dir / "extract_neutral.jsonl"; }
  std::filesystem::path eval_accented() const { return dir / "eval_accented.jsonl"; }
  std::filesystem::path eval_neutral() const { return dir / "eval_neutral.jsonl"; }
  std::filesystem::path classifier() const { return dir / "classifier.json"; }
};

std::string task_config_json(const task::TaskConfig& config);
task::TaskConfig task_config_from_json(const std::string& text);

}  // namespace steer
