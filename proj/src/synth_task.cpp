#include "steer/synth_task.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace steer::task {

int Vocabulary::canonical(int word) const {
  if (word < 0 || word >= n_words) throw TaskError("unknown content word " + std::to_string(word));
  return kSpecials + word;
}

int Vocabulary::variant(int word, bool accented) const {
  if (word < 0 || word >= n_words) throw TaskError("unknown content word " + std::to_string(word));
  return kSpecials + n_words * (accented ? 2 : 1) + word;
}

int Vocabulary::timbre(int symbol) const {
  if (symbol < 0 || symbol >= n_timbre) throw TaskError("unknown timbre symbol " + std::to_string(symbol));
  return kSpecials + 3 * n_words + symbol;
}

Vocabulary::Kind Vocabulary::kind(int token) const {
  if (token < 0 || token >= size()) return Kind::kInvalid;
  if (token < kSpecials) return Kind::kSpecial;
  const int t = token - kSpecials;
  if (t < n_words) return Kind::kCanonical;
  if (t < 2 * n_words) return Kind::kNeutral;
  if (t < 3 * n_words) return Kind::kAccented;
  return Kind::kTimbre;
}

int Vocabulary::word_of(int token) const {
  switch (kind(token)) {
    case Kind::kCanonical:
    case Kind::kNeutral:
    case Kind::kAccented:
      return (token - kSpecials) % n_words;
    default:
      return -1;
  }
}

int Vocabulary::timbre_of(int token) const {
  return kind(token) == Kind::kTimbre ? token - kSpecials - 3 * n_words : -1;
}

void TaskConfig::validate() const {
  if (n_words < 2 || n_timbre < 2) throw TaskError("TaskConfig: need >= 2 words and timbre symbols");
  if (min_words < 1 || max_words < min_words) throw TaskError("TaskConfig: invalid sentence length range");
  if (p_acc < 0.0 || p_acc > 1.0) throw TaskError("TaskConfig: p_acc outside [0, 1]");
  if (!(kappa > 0.0)) throw TaskError("TaskConfig: kappa must be positive");
  if (gate_threshold < 0.0 || gate_threshold > 1.0) throw TaskError("TaskConfig: gate_threshold outside [0, 1]");
  if (speakers_per_condition < 1) throw TaskError("TaskConfig: need at least one speaker per condition");
  if (dominant_mass + secondary_mass > 1.0 || dominant_mass < 0.0 || secondary_mass < 0.0) {
    throw TaskError("TaskConfig: invalid timbre masses");
  }
}

double profile_cosine(const SpeakerProfile& a, const SpeakerProfile& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.timbre_dist.size(); ++i) {
    dot += a.timbre_dist[i] * b.timbre_dist[i];
    na += a.timbre_dist[i] * a.timbre_dist[i];
    nb += b.timbre_dist[i] * b.timbre_dist[i];
  }
  return dot / std::sqrt(na * nb);
}

std::vector<SpeakerProfile> make_speakers(int n, const TaskConfig& config) {
  config.validate();
  if (n < 1 || 2 * n > config.n_timbre) {
    throw TaskError("make_speakers: " + std::to_string(n) + " speakers need " + std::to_string(2 * n) +
                    " timbre symbols, have " + std::to_string(config.n_timbre));
  }
  const int rest = config.n_timbre - 2;
  const double floor = (1.0 - config.dominant_mass - config.secondary_mass) / rest;
  std::vector<SpeakerProfile> out;
  for (int s = 0; s < n; ++s) {
    SpeakerProfile p{s, std::vector<double>(static_cast<std::size_t>(config.n_timbre), floor)};
    p.timbre_dist[static_cast<std::size_t>(2 * s)] = config.dominant_mass;
    p.timbre_dist[static_cast<std::size_t>(2 * s + 1)] = config.secondary_mass;
    out.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      if (profile_cosine(out[i], out[j]) > 0.85) throw TaskError("make_speakers: profiles not distinct enough");
    }
  }
  return out;
}

std::vector<Sentence> make_sentences(int n, const TaskConfig& config, Rng& rng) {
  config.validate();
  std::set<Sentence> seen;
  std::vector<Sentence> out;
  const auto span = static_cast<std::uint64_t>(config.max_words - config.min_words + 1);
  int attempts = 0;
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > 100 * n + 100) throw TaskError("make_sentences: cannot draw enough distinct sentences");
    const int len = config.min_words + static_cast<int>(rng.below(span));
    Sentence s(static_cast<std::size_t>(len));
    for (auto& w : s) w = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.n_words)));
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

SentencePool split_pool(std::vector<Sentence> sentences, double eval_fraction) {
  if (eval_fraction < 0.0 || eval_fraction >= 1.0) throw TaskError("split_pool: eval_fraction outside [0, 1)");
  const auto n_eval = static_cast<std::size_t>(std::llround(eval_fraction * static_cast<double>(sentences.size())));
  SentencePool pool;
  pool.eval.assign(sentences.end() - static_cast<std::ptrdiff_t>(n_eval), sentences.end());
  sentences.resize(sentences.size() - n_eval);
  pool.train = std::move(sentences);
  return pool;
}

std::vector<int> render_utterance(const Sentence& text, const SpeakerProfile& speaker, const AccentSpec& accent,
                                  const Vocabulary& vocab, Rng& rng) {
  if (accent.accent_prob < 0.0 || accent.accent_prob > 1.0) throw TaskError("render: accent_prob outside [0, 1]");
  if (static_cast<int>(speaker.timbre_dist.size()) != vocab.n_timbre) {
    throw TaskError("render: timbre distribution size does not match vocabulary");
  }
  std::vector<int> out;
  out.reserve(2 * text.size() + 1);
  for (int w : text) {
    const bool acc = rng.uniform() < accent.accent_prob;
    out.push_back(vocab.variant(w, acc));
    out.push_back(vocab.timbre(static_cast<int>(rng.categorical(speaker.timbre_dist))));
  }
  out.push_back(Vocabulary::kStop);
  return out;
}

namespace {

const SpeakerProfile& speaker_at(std::span<const SpeakerProfile> speakers, std::size_t i) {
  return speakers[i % speakers.size()];
}

}  // namespace

std::vector<Triplet> build_triplets(int n, std::span<const SpeakerProfile> speakers, const AccentSpec& accent,
                                    std::span<const Sentence> sentence_pool, const Vocabulary& vocab, Rng& rng,
                                    bool render_target) {
  if (n < 0) throw TaskError("build_triplets: negative count");
  if (speakers.empty()) throw TaskError("build_triplets: no speakers");
  if (sentence_pool.size() < 2) throw TaskError("build_triplets: pool too small for disjoint target/reference sets");
  const std::size_t half = sentence_pool.size() / 2;
  const auto targets = sentence_pool.subspan(0, half);
  const auto references = sentence_pool.subspan(half);
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng r = rng.child(static_cast<std::uint64_t>(i));
    const auto& spk = speaker_at(speakers, static_cast<std::size_t>(i));
    Triplet t;
    t.target_text = targets[r.below(targets.size())];
    t.reference_text = references[r.below(references.size())];
    t.speaker_id = spk.speaker_id;
    t.accent_prob = accent.accent_prob;
    t.reference_sequence = render_utterance(t.reference_text, spk, accent, vocab, r);
    if (render_target) t.target_sequence = render_utterance(t.target_text, spk, accent, vocab, r);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Triplet> build_mixed_triplets(int n, std::span<const SpeakerProfile> speakers, double p_acc,
                                          std::span<const Sentence> sentence_pool, const Vocabulary& vocab,
                                          Rng& rng) {
  if (speakers.empty()) throw TaskError("build_mixed_triplets: no speakers");
  if (sentence_pool.size() < 2) throw TaskError("build_mixed_triplets: pool too small");
  const std::size_t half = sentence_pool.size() / 2;
  const auto targets = sentence_pool.subspan(0, half);
  const auto references = sentence_pool.subspan(half);
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng r = rng.child(static_cast<std::uint64_t>(i));
    const auto& spk = speakers[r.below(speakers.size())];
    const AccentSpec accent = r.uniform() < 0.5 ? AccentSpec::neutral() : AccentSpec::accented(p_acc);
    Triplet t;
    t.target_text = targets[r.below(targets.size())];
    t.reference_text = references[r.below(references.size())];
    t.speaker_id = spk.speaker_id;
    t.accent_prob = accent.accent_prob;
    t.reference_sequence = render_utterance(t.reference_text, spk, accent, vocab, r);
    t.target_sequence = render_utterance(t.target_text, spk, accent, vocab, r);
    out.push_back(std::move(t));
  }
  return out;
}

void check_surface(std::span<const int> sequence, const Vocabulary& vocab) {
  std::size_t n = sequence.size();
  if (n > 0 && sequence.back() == Vocabulary::kStop) --n;
  if (n % 2 != 0) throw TaskError("malformed surface sequence: odd number of symbols");
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = vocab.kind(sequence[i]);
    const bool content = k == Vocabulary::Kind::kNeutral || k == Vocabulary::Kind::kAccented;
    if ((i % 2 == 0 && !content) || (i % 2 == 1 && k != Vocabulary::Kind::kTimbre)) {
      throw TaskError("malformed surface sequence at index " + std::to_string(i));
    }
  }
}

PerturbResult perturb_reference(std::span<const int> sequence, std::span<const double> base_dist, double kappa,
                                const Vocabulary& vocab, Rng& rng, double gate_threshold) {
  check_surface(sequence, vocab);
  if (static_cast<int>(base_dist.size()) != vocab.n_timbre) throw TaskError("perturb: base distribution size mismatch");
  if (!(kappa > 0.0)) throw TaskError("perturb: kappa must be positive");
  PerturbResult out;
  out.sequence.assign(sequence.begin(), sequence.end());
  out.gamma = rng.uniform();
  if (out.gamma <= gate_threshold) return out;
  out.applied = true;
  std::vector<double> alpha(base_dist.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] = kappa * base_dist[i];
  const std::vector<double> jittered = rng.dirichlet(alpha);
  for (auto& tok : out.sequence) {
    if (vocab.kind(tok) == Vocabulary::Kind::kTimbre) tok = vocab.timbre(static_cast<int>(rng.categorical(jittered)));
  }
  return out;
}

std::vector<int> build_prompt(const Triplet& triplet, std::span<const int> reference_sequence,
                              const Vocabulary& vocab) {
  std::vector<int> p;
  p.reserve(triplet.reference_text.size() + reference_sequence.size() + triplet.target_text.size() + 4);
  p.push_back(Vocabulary::kBos);
  for (int w : triplet.reference_text) p.push_back(vocab.canonical(w));
  p.push_back(Vocabulary::kSep);
  for (int tok : reference_sequence) {
    if (tok != Vocabulary::kStop) p.push_back(tok);
  }
  p.push_back(Vocabulary::kSep);
  for (int w : triplet.target_text) p.push_back(vocab.canonical(w));
  p.push_back(Vocabulary::kGen);
  return p;
}

std::vector<int> build_prompt(const Triplet& triplet, const Vocabulary& vocab) {
  return build_prompt(triplet, triplet.reference_sequence, vocab);
}

SurfaceStats surface_stats(std::span<const int> sequence, const Vocabulary& vocab) {
  SurfaceStats s;
  for (int tok : sequence) {
    switch (vocab.kind(tok)) {
      case Vocabulary::Kind::kAccented:
        ++s.accented;
        [[fallthrough]];
      case Vocabulary::Kind::kNeutral:
        ++s.content;
        break;
      case Vocabulary::Kind::kTimbre:
        ++s.timbre;
        break;
      default:
        break;
    }
  }
  return s;
}

std::vector<double> timbre_histogram(std::span<const int> sequence, const Vocabulary& vocab) {
  std::vector<double> h(static_cast<std::size_t>(vocab.n_timbre), 0.0);
  for (int tok : sequence) {
    const int s = vocab.timbre_of(tok);
    if (s >= 0) h[static_cast<std::size_t>(s)] += 1.0;
  }
  return h;
}

Sentence content_words(std::span<const int> sequence, const Vocabulary& vocab) {
  Sentence out;
  for (int tok : sequence) {
    const auto k = vocab.kind(tok);
    if (k == Vocabulary::Kind::kNeutral || k == Vocabulary::Kind::kAccented) out.push_back(vocab.word_of(tok));
  }
  return out;
}

}  // namespace steer::task
