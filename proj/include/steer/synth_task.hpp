#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "steer/rng.hpp"

namespace steer::task {

class TaskError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Token layout: 4 specials, canonical words, neutral variants (w0),
// accented variants (w1), timbre symbols.
struct Vocabulary {
  static constexpr int kBos = 0;
  static constexpr int kSep = 1;
  static constexpr int kGen = 2;
  static constexpr int kStop = 3;
  static constexpr int kSpecials = 4;

  int n_words = 64;
  int n_timbre = 16;

  enum class Kind { kSpecial, kCanonical, kNeutral, kAccented, kTimbre, kInvalid };

  int size() const { return kSpecials + 3 * n_words + n_timbre; }
  int canonical(int word) const;
  int variant(int word, bool accented) const;
  int timbre(int symbol) const;
  Kind kind(int token) const;
  // Word index of a canonical or variant token; -1 otherwise.
  int word_of(int token) const;
  // Timbre symbol index; -1 for non-timbre tokens.
  int timbre_of(int token) const;
};

struct AccentSpec {
  double accent_prob = 0.0;

  static AccentSpec neutral() { return {0.0}; }
  static AccentSpec accented(double p_acc = 0.9) { return {p_acc}; }
};

struct SpeakerProfile {
  int speaker_id = 0;
  std::vector<double> timbre_dist;
};

// Word indices into the content vocabulary.
using Sentence = std::vector<int>;

struct TaskConfig {
  int n_words = 64;
  int n_timbre = 16;
  int min_words = 8;
  int max_words = 20;
  double p_acc = 0.9;
  double kappa = 20.0;
  double gate_threshold = 0.3;
  int speakers_per_condition = 4;
  double dominant_mass = 0.7;
  double secondary_mass = 0.2;

  Vocabulary vocabulary() const { return Vocabulary{n_words, n_timbre}; }
  void validate() const;
};

// Speakers 0..n-1. Speaker s puts dominant_mass on symbol 2s, secondary_mass
// on 2s+1 and spreads the rest uniformly; needs 2n <= n_timbre. Pairwise
// cosine similarity is checked to be <= 0.85.
std::vector<SpeakerProfile> make_speakers(int n, const TaskConfig& config);

double profile_cosine(const SpeakerProfile& a, const SpeakerProfile& b);

// n distinct random sentences with lengths in [min_words, max_words].
std::vector<Sentence> make_sentences(int n, const TaskConfig& config, Rng& rng);

struct SentencePool {
  std::vector<Sentence> train;  // extraction/training sentences
  std::vector<Sentence> eval;  // held-out sentences
};

// Holds out round(eval_fraction * n) sentences for evaluation.
SentencePool split_pool(std::vector<Sentence> sentences, double eval_fraction);

// Per word: variant (accented with probability accent_prob) then one timbre
// symbol; terminated by the stop token. Length 2 * text.size() + 1.
std::vector<int> render_utterance(const Sentence& text, const SpeakerProfile& speaker, const AccentSpec& accent,
                                  const Vocabulary& vocab, Rng& rng);

struct Triplet {
  Sentence target_text;
  Sentence reference_text;
  std::vector<int> reference_sequence;
  int speaker_id = 0;
  double accent_prob = 0.0;
  // Rendered target under the same speaker/accent; filled for training data.
  std::vector<int> target_sequence;
};

// Splits the pool into disjoint halves (first half targets, second half
// references) and draws n (target, reference) pairs; speakers are assigned
// round-robin and the reference is rendered under that speaker and accent.
std::vector<Triplet> build_triplets(int n, std::span<const SpeakerProfile> speakers, const AccentSpec& accent,
                                    std::span<const Sentence> sentence_pool, const Vocabulary& vocab, Rng& rng,
                                    bool render_target = false);

// Training mixture: each triplet draws its speaker uniformly from `speakers`
// and its accent condition (neutral or accented(p_acc)) with probability 1/2,
// so accent and timbre vary independently. Targets are rendered.
std::vector<Triplet> build_mixed_triplets(int n, std::span<const SpeakerProfile> speakers, double p_acc,
                                          std::span<const Sentence> sentence_pool, const Vocabulary& vocab,
                                          Rng& rng);

struct PerturbResult {
  std::vector<int> sequence;
  bool applied = false;
  double gamma = 0.0;
};

// Draws gamma ~ U(0,1); when gamma > threshold, every timbre symbol is
// resampled from a Dirichlet(kappa * base_dist) draw. Content tokens are
// never modified.
PerturbResult perturb_reference(std::span<const int> sequence, std::span<const double> base_dist, double kappa,
                                const Vocabulary& vocab, Rng& rng, double gate_threshold = 0.3);

// Validates alternating (variant, timbre) pairs with an optional trailing stop.
void check_surface(std::span<const int> sequence, const Vocabulary& vocab);

// [BOS] ref_text [SEP] ref_surface (no stop) [SEP] target_text [GEN]
std::vector<int> build_prompt(const Triplet& triplet, const Vocabulary& vocab);
std::vector<int> build_prompt(const Triplet& triplet, std::span<const int> reference_sequence,
                              const Vocabulary& vocab);

// ---- surface statistics ----

struct SurfaceStats {
  int content = 0;
  int accented = 0;
  int timbre = 0;
  double accented_fraction() const { return content > 0 ? static_cast<double>(accented) / content : 0.0; }
};

SurfaceStats surface_stats(std::span<const int> sequence, const Vocabulary& vocab);
std::vector<double> timbre_histogram(std::span<const int> sequence, const Vocabulary& vocab);
// Canonical word sequence of the content tokens (variants collapse).
Sentence content_words(std::span<const int> sequence, const Vocabulary& vocab);

}  // namespace steer::task
