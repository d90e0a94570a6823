#include <gtest/gtest.h>

#include <fstream>

#include "json.hpp"
#include "steer/eval.hpp"
#include "test_support.hpp"

using namespace steer;
using namespace steer::eval;

namespace {

const task::Vocabulary kVocab{64, 16};

std::vector<int> surface(std::initializer_list<std::pair<int, bool>> words, int timbre = 0) {
  std::vector<int> out;
  for (auto [w, acc] : words) {
    out.push_back(kVocab.variant(w, acc));
    out.push_back(kVocab.timbre(timbre));
  }
  out.push_back(task::Vocabulary::kStop);
  return out;
}

}  // namespace

TEST(Classifier, ThresholdDecision) {
  const auto c = AttrClassifier::with_threshold(0.5);
  EXPECT_EQ(c.classify(surface({{1, true}, {2, true}, {3, false}}), kVocab), AccentClass::kAccented);
  EXPECT_EQ(c.classify(surface({{1, true}, {2, false}, {3, false}}), kVocab), AccentClass::kNeutral);
  EXPECT_FALSE(c.classify(std::vector<int>{task::Vocabulary::kStop}, kVocab).has_value());
  const auto back = AttrClassifier::from_json(c.to_json());
  EXPECT_EQ(back.kind, AttrClassifier::Kind::kThreshold);
  EXPECT_EQ(back.threshold, 0.5);
}

TEST(Classifier, LogisticFitSeparatesConditions) {
  task::TaskConfig cfg;
  const auto sp = task::make_speakers(2, cfg);
  Rng r(1);
  const auto sents = task::make_sentences(200, cfg, r);
  std::vector<LabeledSequence> corpus;
  for (const auto& s : sents) {
    corpus.push_back({task::render_utterance(s, sp[0], task::AccentSpec::accented(0.9), kVocab, r), AccentClass::kAccented});
    corpus.push_back({task::render_utterance(s, sp[1], task::AccentSpec::neutral(), kVocab, r), AccentClass::kNeutral});
  }
  const auto fit = train_attr_classifier(corpus, 3, kVocab);
  EXPECT_EQ(fit.n_train + fit.n_heldout, corpus.size());
  EXPECT_EQ(fit.n_heldout, 80u);
  EXPECT_GE(fit.heldout_accuracy, 0.99);
  EXPECT_EQ(fit.classifier.kind, AttrClassifier::Kind::kLogistic);
  // The boundary sits between 0 and 0.9.
  EXPECT_EQ(fit.classifier.decide(0.0), AccentClass::kNeutral);
  EXPECT_EQ(fit.classifier.decide(0.9), AccentClass::kAccented);
  const auto back = AttrClassifier::from_json(fit.classifier.to_json());
  EXPECT_EQ(back.weight, fit.classifier.weight);
  EXPECT_EQ(back.bias, fit.classifier.bias);

  std::vector<LabeledSequence> one_class(corpus.begin(), corpus.begin() + 1);
  EXPECT_THROW(train_attr_classifier(one_class, 3, kVocab), EvalError);
}

TEST(Metrics, IsrCountsStatuses) {
  std::vector<model::GenerationResult> rs(4);
  rs[0].status = rs[2].status = model::GenerationStatus::kOk;
  EXPECT_DOUBLE_EQ(isr(rs), 0.5);
  EXPECT_THROW(isr(std::span<const model::GenerationResult>{}), EvalError);
}

TEST(Metrics, AmrCountsMalformedAsMismatch) {
  const auto clf = AttrClassifier::with_threshold(0.5);
  std::vector<std::vector<int>> seqs{surface({{1, true}, {2, true}}), surface({{1, false}}),
                                     {kVocab.timbre(1), kVocab.timbre(2)}};
  const auto r = amr(seqs, clf, AccentClass::kAccented, kVocab);
  EXPECT_EQ(r.total, 3u);
  EXPECT_EQ(r.matched, 1u);
  EXPECT_EQ(r.malformed, 1u);
  EXPECT_DOUBLE_EQ(r.rate, 1.0 / 3.0);
}

TEST(Metrics, SpeakerEmbeddingAndCosine) {
  const auto a = surface({{1, false}, {2, false}, {3, false}}, 4);
  std::vector<int> b = a;
  b[3] = kVocab.timbre(5);
  const auto ea = speaker_embedding(a, kVocab);
  const auto eb = speaker_embedding(b, kVocab);
  EXPECT_NEAR(cosine_sim(ea, ea), 1.0, 1e-15);
  // a = (0,0,0,0,3,0...), b = (...,2,1,...): cos = 2 / sqrt(5)
  EXPECT_NEAR(cosine_sim(ea, eb), 2.0 / std::sqrt(5.0), 1e-12);
  EXPECT_THROW(speaker_embedding(std::vector<int>{kVocab.variant(1, false)}, kVocab), EvalError);
}

TEST(Metrics, ContentErrorRateIsLevenshtein) {
  EXPECT_DOUBLE_EQ(content_error_rate(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(content_error_rate(std::vector<int>{1, 3}, std::vector<int>{1, 2, 3}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(content_error_rate(std::vector<int>{3, 2, 1, 9}, std::vector<int>{1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(content_error_rate(std::vector<int>{}, std::vector<int>{5, 6}), 1.0);
}

TEST(Summarize, UsesSuccessfulSamplesOnly) {
  const auto clf = AttrClassifier::with_threshold(0.5);
  std::vector<GenerationRecord> recs(2);
  auto s0 = surface({{1, true}, {2, true}}, 3);
  s0.pop_back();
  recs[0].result.tokens = s0;
  recs[0].result.status = model::GenerationStatus::kOk;
  recs[0].reference_sequence = surface({{7, true}}, 3);
  recs[0].target_text = {1, 2};
  recs[1].result.tokens = {kVocab.variant(4, false)};
  recs[1].reference_sequence = surface({{7, true}}, 3);
  recs[1].target_text = {4};
  const auto row = summarize("x", 2, 1.5, recs, clf, kVocab, 3);
  EXPECT_DOUBLE_EQ(row.isr, 0.5);
  EXPECT_DOUBLE_EQ(row.amr_accented, 1.0);
  EXPECT_DOUBLE_EQ(row.amr_neutral, 0.0);
  EXPECT_NEAR(row.spk_sim, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(row.cer, 0.0);
  EXPECT_EQ(row.n_success, 1u);
  EXPECT_EQ(row.norm_guard_events, 3);
}

TEST(Report, CsvRoundTripAndOrdering) {
  fixture::TempDir dir("report");
  EvalRow base;
  base.isr = 1;
  base.amr_accented = 0.95;
  EvalRow a = base, b = base;
  a.layer = 2;
  a.alpha = 2.0;
  b.layer = 1;
  b.alpha = 1.0;
  b.norm_guard_events = 4;
  EXPECT_EQ(csv_line(base).substr(0, 2), ",,");
  const auto rows = ordered_rows({a, b, base});
  EXPECT_TRUE(rows[0].is_baseline());
  EXPECT_EQ(*rows[1].layer, 1);
  write_rows_csv(rows, dir / "r.csv");
  const auto back = read_rows_csv(dir / "r.csv");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].norm_guard_events, 4);
  EXPECT_DOUBLE_EQ(back[2].amr_accented, 0.95);
  EXPECT_THROW(parse_csv_line("1,2,3"), EvalError);

  report(rows, dir / "r2.csv", dir / "r.json", ReportMeta{7, "ck", "vec"});
  std::ifstream js(dir / "r.json");
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j.at("metadata").at("seed"), 7);
  EXPECT_EQ(j.at("metadata").at("checkpoint_digest"), "ck");
  EXPECT_EQ(j.at("conditions").size(), 3u);
}
