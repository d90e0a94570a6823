#include "steer/pipeline.hpp"

#include "json.hpp"

namespace steer {

model::TrainingSequence training_sequence(const task::Triplet& triplet, const task::Vocabulary& vocab) {
  if (triplet.target_sequence.empty()) throw task::TaskError("training triplet has no rendered target");
  model::TrainingSequence seq;
  seq.tokens = task::build_prompt(triplet, vocab);
  seq.gen_start = static_cast<int>(seq.tokens.size()) - 1;
  seq.tokens.insert(seq.tokens.end(), triplet.target_sequence.begin(), triplet.target_sequence.end());
  return seq;
}

std::vector<model::TrainingSequence> training_sequences(const std::vector<task::Triplet>& triplets,
                                                        const task::Vocabulary& vocab) {
  std::vector<model::TrainingSequence> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) out.push_back(training_sequence(t, vocab));
  return out;
}

std::vector<task::SpeakerProfile> all_speakers(const task::TaskConfig& config) {
  return task::make_speakers(2 * config.speakers_per_condition, config);
}

std::vector<task::SpeakerProfile> native_speakers(const task::TaskConfig& config) {
  auto all = all_speakers(config);
  all.resize(static_cast<std::size_t>(config.speakers_per_condition));
  return all;
}

std::vector<task::SpeakerProfile> accented_speakers(const task::TaskConfig& config) {
  auto all = all_speakers(config);
  all.erase(all.begin(), all.begin() + config.speakers_per_condition);
  return all;
}

void CorpusSizes::validate() const {
  if (n_sentences < 4) throw task::TaskError("corpus needs at least 4 sentences");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) throw task::TaskError("eval fraction must lie in (0, 1)");
  if (n_train < 1 || n_extract < 1 || n_eval < 1 || n_classifier < 1) {
    throw task::TaskError("corpus counts must be positive");
  }
}

Corpus generate_corpus(const task::TaskConfig& config, const CorpusSizes& sizes, std::uint64_t seed) {
  config.validate();
  sizes.validate();
  const auto vocab = config.vocabulary();
  const auto speakers = all_speakers(config);
  const auto native = native_speakers(config);
  const auto accented = accented_speakers(config);
  Corpus c;
  Rng sentence_rng(seed, stream_id("corpus.sentences"));
  c.pool = task::split_pool(task::make_sentences(sizes.n_sentences, config, sentence_rng), sizes.eval_fraction);
  if (c.pool.eval.size() < 2 || c.pool.train.size() < 2) throw task::TaskError("sentence split leaves a side too small");

  Rng train_rng(seed, stream_id("corpus.train"));
  c.train = task::build_mixed_triplets(sizes.n_train, speakers, config.p_acc, c.pool.train, vocab, train_rng);

  Rng ea(seed, stream_id("corpus.extract.accented"));
  Rng en(seed, stream_id("corpus.extract.neutral"));
  c.extract_accented =
      task::build_triplets(sizes.n_extract, accented, task::AccentSpec::accented(config.p_acc), c.pool.train, vocab, ea);
  c.extract_neutral = task::build_triplets(sizes.n_extract, native, task::AccentSpec::neutral(), c.pool.train, vocab, en);

  Rng va(seed, stream_id("corpus.eval.accented"));
  Rng vn(seed, stream_id("corpus.eval.neutral"));
  c.eval_accented = task::build_triplets(sizes.n_eval, accented, task::AccentSpec::accented(config.p_acc), c.pool.eval,
                                         vocab, va, true);
  c.eval_neutral =
      task::build_triplets(sizes.n_eval, native, task::AccentSpec::neutral(), c.pool.eval, vocab, vn, true);

  Rng cr(seed, stream_id("corpus.classifier"));
  for (int i = 0; i < 2 * sizes.n_classifier; ++i) {
    Rng r = cr.child(static_cast<std::uint64_t>(i));
    const bool acc = i % 2 == 1;
    const auto& spk = speakers[r.below(speakers.size())];
    const auto& text = c.pool.train[r.below(c.pool.train.size())];
    const auto spec = acc ? task::AccentSpec::accented(config.p_acc) : task::AccentSpec::neutral();
    c.classifier_corpus.push_back({task::render_utterance(text, spk, spec, vocab, r),
                                   acc ? eval::AccentClass::kAccented : eval::AccentClass::kNeutral});
    c.classifier_speakers.push_back(spk.speaker_id);
  }
  return c;
}

std::string task_config_json(const task::TaskConfig& c) {
  nlohmann::json j{{"n_words", c.n_words},
                   {"n_timbre", c.n_timbre},
                   {"min_words", c.min_words},
                   {"max_words", c.max_words},
                   {"p_acc", c.p_acc},
                   {"kappa", c.kappa},
                   {"gate_threshold", c.gate_threshold},
                   {"speakers_per_condition", c.speakers_per_condition},
                   {"dominant_mass", c.dominant_mass},
                   {"secondary_mass", c.secondary_mass}};
  return j.dump(2);
}

task::TaskConfig task_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  task::TaskConfig c;
  c.n_words = j.at("n_words").get<int>();
  c.n_timbre = j.at("n_timbre").get<int>();
  c.min_words = j.at("min_words").get<int>();
  c.max_words = j.at("max_words").get<int>();
  c.p_acc = j.at("p_acc").get<double>();
  c.kappa = j.at("kappa").get<double>();
  c.gate_threshold = j.at("gate_threshold").get<double>();
  c.speakers_per_condition = j.at("speakers_per_condition").get<int>();
  c.dominant_mass = j.at("dominant_mass").get<double>();
  c.secondary_mass = j.at("secondary_mass").get<double>();
  c.validate();
  return c;
}

}  // namespace steer
