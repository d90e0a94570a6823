#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "steer/binary_io.hpp"
#include "steer/pipeline.hpp"
#include "steer/steering.hpp"
#include "test_support.hpp"

using namespace steer;

namespace {

std::vector<double> to_std(const num::RowVector& v) { return {v.data(), v.data() + v.size()}; }

struct Fixture {
  task::TaskConfig cfg;
  task::Vocabulary vocab;
  std::vector<task::SpeakerProfile> speakers;
  std::vector<task::Triplet> acc, neu;
  model::Transformer model;

  explicit Fixture(int n) : model(model::Transformer::init(fixture::tiny_config(212, 3))) {
    cfg.min_words = 3;
    cfg.max_words = 6;
    vocab = cfg.vocabulary();
    speakers = all_speakers(cfg);
    Rng r(21);
    const auto pool = task::make_sentences(60, cfg, r);
    acc = task::build_triplets(n, accented_speakers(cfg), task::AccentSpec::accented(cfg.p_acc), pool, vocab, r);
    neu = task::build_triplets(n, native_speakers(cfg), task::AccentSpec::neutral(), pool, vocab, r);
    fixture::boost_stop(model, 3, 8);
  }
};

}  // namespace

TEST(ApplySteering, MatchesOracleAndPreservesNorm) {
  Rng r(1);
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 1 + static_cast<int>(r.below(40));
    const num::RowVector a = fixture::random_matrix(1, d, r, r.uniform() * 10);
    const num::RowVector v = fixture::random_matrix(1, d, r, r.uniform() * 5);
    SteerConfig c;
    c.alpha = r.uniform() * 4;
    c.sign = r.below(2) ? SteerSign::kAdd : SteerSign::kSubtract;
    const auto got = apply_steering(a, v, c);
    const auto want = oracle::steer(to_std(a), to_std(v), c.alpha, c.sign == SteerSign::kSubtract, c.epsilon);
    ASSERT_TRUE(want.has_value());
    EXPECT_FALSE(got.norm_guard);
    EXPECT_NEAR(got.value.norm(), a.norm(), 1e-9 * a.norm());
    for (int i = 0; i < d; ++i) EXPECT_NEAR(got.value[i], (*want)[i], 1e-9 * a.norm());
  }
}

TEST(ApplySteering, IdentityCases) {
  Rng r(2);
  const num::RowVector a = fixture::random_matrix(1, 8, r);
  const num::RowVector v = fixture::random_matrix(1, 8, r);
  SteerConfig c;
  c.alpha = 0.0;
  EXPECT_TRUE((apply_steering(a, v, c).value.array() == a.array()).all());
  c.alpha = 3.0;
  EXPECT_TRUE((apply_steering(a, num::RowVector::Zero(8), c).value.array() == a.array()).all());
  const auto z = apply_steering(num::RowVector::Zero(8), v, c);
  EXPECT_TRUE(z.norm_guard);
  EXPECT_EQ(z.value.norm(), 0.0);
}

TEST(ApplySteering, GuardFiresOnCancellation) {
  num::RowVector a(3);
  a << 1.0, -2.0, 0.5;
  SteerConfig c;
  c.alpha = 1.0;
  const auto out = apply_steering(a, a, c);  // a - a = 0
  EXPECT_TRUE(out.norm_guard);
  EXPECT_TRUE((out.value.array() == a.array()).all());
  c.alpha = 1.0 - 1e-12;
  EXPECT_TRUE(apply_steering(a, a, c).norm_guard);
}

TEST(ApplySteering, Validation) {
  const num::RowVector a = num::RowVector::Ones(4);
  EXPECT_THROW(apply_steering(a, num::RowVector::Ones(3), SteerConfig{}), SteeringError);
  num::RowVector bad = a;
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(apply_steering(bad, a, SteerConfig{}), SteeringError);
  SteerConfig c;
  c.alpha = -1;
  EXPECT_ANY_THROW(c.validate());
  EXPECT_EQ(sign_from_string("add"), SteerSign::kAdd);
  EXPECT_THROW(sign_from_string("sideways"), SteeringError);
}

TEST(SteeringHook, CountsGuardEvents) {
  SteeringVector sv;
  sv.layer = 1;
  sv.values = num::RowVector::Ones(4);
  SteerConfig c;
  c.layer = 1;
  std::atomic<long> events = 0;
  const auto hook = make_steering_hook(sv, c, &events);
  EXPECT_EQ(hook.layer, 1);
  hook.fn(num::RowVector::Ones(4));
  EXPECT_EQ(events.load(), 1);
  const num::RowVector out = hook.fn(num::RowVector::LinSpaced(4, 1, 4));
  EXPECT_NEAR(out.norm(), num::RowVector::LinSpaced(4, 1, 4).norm(), 1e-12);
  EXPECT_EQ(events.load(), 1);
}

TEST(Extraction, MatchesBruteForceOracle) {
  Fixture f(24);
  const model::LayerSet layers{0, 1, 2};
  for (bool augment : {false, true}) {
    ExtractOptions o;
    o.layers = layers;
    o.augment = augment;
    o.seed = 5;
    o.jobs = 2;
    const auto vecs = extract_vectors(f.model, f.acc, f.neu, f.speakers, f.vocab, o);
    const auto ma = oracle::condition_means(f.model, f.acc, f.speakers, f.vocab, layers, 5, 1.0, augment);
    const auto mn = oracle::condition_means(f.model, f.neu, f.speakers, f.vocab, layers, 5, 1.0, augment);
    ASSERT_GT(ma.count, 0u);
    ASSERT_GT(mn.count, 0u);
    ASSERT_LT(ma.count, f.acc.size());  // some samples fail and must be dropped
    const auto want = oracle::difference(ma, mn);
    for (int l : layers) {
      const auto& got = vecs.at(l);
      EXPECT_EQ(got.meta.n_accented, ma.count);
      EXPECT_EQ(got.meta.n_neutral, mn.count);
      EXPECT_EQ(got.meta.augmented, augment);
      for (int k = 0; k < got.values.size(); ++k) EXPECT_NEAR(got.values[k], want.at(l)[k], 1e-10);
    }
  }
}

TEST(Extraction, JobsDoNotChangeResult) {
  Fixture f(12);
  ExtractOptions o;
  o.layers = {1};
  o.seed = 3;
  const auto a = extract_vectors(f.model, f.acc, f.neu, f.speakers, f.vocab, o);
  o.jobs = 4;
  const auto b = extract_vectors(f.model, f.acc, f.neu, f.speakers, f.vocab, o);
  EXPECT_TRUE((a.at(1).values.array() == b.at(1).values.array()).all());
}

TEST(Extraction, AllFailedConditionIsAnError) {
  Fixture f(4);
  ExtractOptions o;
  o.layers = {0};
  std::vector<SampleActivation> failed(3);
  try {
    difference_of_means(failed, failed, o.layers);
    FAIL();
  } catch (const SteeringError& e) {
    EXPECT_NE(std::string(e.what()).find("accented"), std::string::npos) << e.what();
  }
  o.layers = {7};
  EXPECT_THROW(extract_vectors(f.model, f.acc, f.neu, f.speakers, f.vocab, o), std::exception);
  EXPECT_THROW(extract_vectors(f.model, {}, f.neu, f.speakers, f.vocab, [] { ExtractOptions o; o.layers = {0}; return o; }()), std::exception);
}

TEST(VectorFile, RoundTripAndCorruption) {
  fixture::TempDir dir("vectors");
  SteeringVectors vs;
  Rng r(4);
  for (int l : {0, 2}) {
    SteeringVector v;
    v.layer = l;
    v.values = fixture::random_matrix(1, 16, r);
    v.meta.n_accented = 10;
    v.meta.n_neutral = 9;
    v.meta.checkpoint_digest = "abc";
    v.meta.seed = 77;
    vs.emplace(l, v);
  }
  save_vectors(vs, dir / "v.bin");
  const auto back = load_vectors(dir / "v.bin");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE((back.at(2).values.array() == vs.at(2).values.array()).all());
  EXPECT_EQ(back.at(0).meta.n_neutral, 9u);
  EXPECT_EQ(back.at(0).meta.seed, 77u);

  EXPECT_THROW(check_compatible(back, 32, "abc"), SteeringError);
  EXPECT_FALSE(check_compatible(back, 16, "abc").has_value());
  EXPECT_TRUE(check_compatible(back, 16, "other").has_value());

  {
    std::ofstream os(dir / "v.bin", std::ios::app | std::ios::binary);
    os << "junk";
  }
  EXPECT_THROW(load_vectors(dir / "v.bin"), io::FormatError);
  std::filesystem::resize_file(dir / "v.bin", 20);
  EXPECT_THROW(load_vectors(dir / "v.bin"), io::FormatError);
  {
    std::ofstream os(dir / "w.bin", std::ios::binary);
    os << "STVF";
    const std::uint32_t ver = 99;
    os.write(reinterpret_cast<const char*>(&ver), 4);
  }
  try {
    load_vectors(dir / "w.bin");
    FAIL();
  } catch (const io::FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Extraction, UnionMeanIsCountWeighted) {
  Fixture f(24);
  const model::LayerSet layers{0, 2};
  ExtractOptions o;
  o.layers = layers;
  o.seed = 8;
  const auto all = collect_sample_activations(f.model, f.acc, f.speakers, f.vocab, o);
  const std::span<const SampleActivation> s(all);
  const auto whole = condition_means(s, layers, "accented");
  const auto first = condition_means(s.first(10), layers, "accented");
  const auto second = condition_means(s.subspan(10), layers, "accented");
  ASSERT_EQ(first.count + second.count, whole.count);
  const double n = static_cast<double>(whole.count);
  for (int l : layers) {
    const num::RowVector want = (first.mean.at(l) * static_cast<double>(first.count) +
                                 second.mean.at(l) * static_cast<double>(second.count)) / n;
    EXPECT_LT((whole.mean.at(l) - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}
