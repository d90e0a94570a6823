#pragma once

#include <filesystem>
#include <vector>

#include "steer/synth_task.hpp"

namespace steer::task {

struct Utterance {
  int speaker_id = 0;
  double accent_prob = 0.0;
  Sentence text;
  std::vector<int> surface;
};

// JSON Lines. Utterance records: {speaker_id, accent_prob, text, surface}.
// Triplet records add reference_text / reference_sequence and, when present,
// target_sequence; "condition" is derived from accent_prob.
void write_utterances(const std::filesystem::path& path, const std::vector<Utterance>& utterances);
std::vector<Utterance> read_utterances(const std::filesystem::path& path);

void write_triplets(const std::filesystem::path& path, const std::vector<Triplet>& triplets);
std::vector<Triplet> read_triplets(const std::filesystem::path& path);

}  // namespace steer::task
