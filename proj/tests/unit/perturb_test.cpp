#include <gtest/gtest.h>

#include "json.hpp"
#include "signals.hpp"
#include "steer/audio/equalizer.hpp"
#include "steer/audio/formant.hpp"
#include "steer/audio/perturb.hpp"
#include "steer/audio/pitch.hpp"

using namespace steer;
using namespace steer::audio;

TEST(Perturb, GateFrequency) {
  Rng r(1);
  PerturbConfig c;
  int applied = 0;
  for (int i = 0; i < 10000; ++i) applied += draw_perturb_params(c, 24000, r).applied;
  EXPECT_NEAR(applied / 10000.0, 0.7, 0.02);
}

TEST(Perturb, ClosedGateIsBitExact) {
  PerturbConfig c;
  c.gate_threshold = 1.0;
  Rng r(2);
  const auto w = signals::vowel(150, 700, 0.3);
  const auto out = perturb(w, c, r);
  EXPECT_FALSE(out.params.applied);
  EXPECT_EQ(out.wave.samples, w.samples);
}

TEST(Perturb, DrawsWithinRangesAndIsDeterministic) {
  PerturbConfig c;
  c.gate_threshold = 0.0;
  const auto w = signals::vowel(150, 700, 0.4);
  Rng a(3), b(3);
  const auto x = perturb(w, c, a);
  const auto y = perturb(w, c, b);
  EXPECT_TRUE(x.params.applied);
  EXPECT_EQ(x.wave.samples, y.wave.samples);
  EXPECT_EQ(x.params.to_json("in.wav"), y.params.to_json("in.wav"));
  EXPECT_GE(x.params.formant_factor, c.formant_lo);
  EXPECT_LE(x.params.formant_factor, c.formant_hi);
  EXPECT_GE(x.params.f0_factor, c.f0_lo);
  EXPECT_LE(x.params.f0_factor, c.f0_hi);
  EXPECT_EQ(x.params.bands.size(), 3u);
  const auto j = nlohmann::json::parse(x.params.to_json("in.wav"));
  EXPECT_EQ(j.at("input"), "in.wav");
}

TEST(Perturb, StagesRunInOrder) {
  PerturbConfig c;
  PerturbParams p;
  p.applied = true;
  p.gamma = 0.9;
  p.formant_factor = 1.1;
  p.f0_factor = 0.9;
  p.bands = {{500, 3.0, 1.0}};
  const auto w = signals::vowel(160, 750, 0.4);
  const auto chained = apply_eq(pitch_shift(formant_shift(w, 1.1, FormantConfig{c.stft}), 0.9, c.stft), p.bands);
  EXPECT_EQ(apply_perturb(w, p, c).samples, chained.samples);
}

TEST(Perturb, ConfigValidation) {
  PerturbConfig c;
  c.gate_threshold = 1.5;
  EXPECT_ANY_THROW(c.validate());
  c = {};
  c.formant_lo = 0.5;
  EXPECT_ANY_THROW(c.validate());
}
