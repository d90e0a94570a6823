#pragma once

// Brute-force reference computations used to check the library.

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "steer/decoder.hpp"
#include "steer/rng.hpp"
#include "steer/steering.hpp"
#include "steer/synth_task.hpp"
#include "steer/trace.hpp"

namespace steer::oracle {

// Element loop version of norm-preserving steering. Returns nullopt when the
// guard should fire.
inline std::optional<std::vector<double>> steer(const std::vector<double>& a, const std::vector<double>& v, double alpha,
                                                bool subtract, double eps) {
  double na = 0, ns = 0;
  std::vector<double> s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    s[i] = subtract ? a[i] - alpha * v[i] : a[i] + alpha * v[i];
    na += a[i] * a[i];
    ns += s[i] * s[i];
  }
  na = std::sqrt(na);
  ns = std::sqrt(ns);
  if (na == 0 || ns < eps * na) return std::nullopt;
  for (auto& x : s) x *= na / ns;
  return s;
}

struct Means {
  std::map<int, std::vector<double>> sum;
  std::size_t count = 0;
};

// Regenerates every sample with the cache-free decoder, replays the whole
// sequence through a fresh forward pass, round-trips the trace through JSONL
// and averages the generated rows by hand.
inline Means condition_means(const model::Transformer& m, std::span<const task::Triplet> triplets,
                             std::span<const task::SpeakerProfile> speakers, const task::Vocabulary& vocab,
                             const model::LayerSet& layers, std::uint64_t seed, double temperature, bool augment,
                             double kappa = 20.0, double gate = 0.3) {
  Means out;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    std::vector<int> ref = t.reference_sequence;
    if (augment) {
      Rng aug = Rng(seed, stream_id("extract.augment")).child(i);
      const task::SpeakerProfile* prof = nullptr;
      for (const auto& s : speakers)
        if (s.speaker_id == t.speaker_id) prof = &s;
      ref = task::perturb_reference(ref, prof->timbre_dist, kappa, vocab, aug, gate).sequence;
    }
    const auto prompt = task::build_prompt(t, ref, vocab);
    Rng sr = Rng(seed, stream_id("extract.sample")).child(i);
    model::GenerateOptions go;
    go.max_new = 4 * static_cast<int>(t.target_text.size()) + 4;
    go.sampler = model::Sampler::with_temperature(temperature, sr.next_u64(), sr.next_u64());
    go.stop_token = task::Vocabulary::kStop;
    const auto gen = model::generate_full_recompute(m, prompt, go);
    if (!gen.ok()) continue;
    std::vector<int> full = prompt;
    full.insert(full.end(), gen.tokens.begin(), gen.tokens.end());
    const auto [logits, trace] = m.forward(full, static_cast<int>(prompt.size()) - 1, layers);
    std::stringstream ss;
    model::write_trace_jsonl(trace, ss);
    std::map<int, std::vector<double>> sums;
    std::map<int, int> counts;
    std::string line;
    while (std::getline(ss, line)) {
      const auto j = nlohmann::json::parse(line);
      if (j.at("role").get<std::string>() != "generated") continue;
      const int l = j.at("layer").get<int>();
      const auto vec = j.at("vector").get<std::vector<double>>();
      auto& acc = sums[l];
      if (acc.empty()) acc.assign(vec.size(), 0.0);
      for (std::size_t k = 0; k < vec.size(); ++k) acc[k] += vec[k];
      ++counts[l];
    }
    for (auto& [l, acc] : sums) {
      auto& tot = out.sum[l];
      if (tot.empty()) tot.assign(acc.size(), 0.0);
      for (std::size_t k = 0; k < acc.size(); ++k) tot[k] += acc[k] / counts[l];
    }
    ++out.count;
  }
  return out;
}

inline std::map<int, std::vector<double>> difference(const Means& acc, const Means& neu) {
  std::map<int, std::vector<double>> out;
  for (const auto& [l, a] : acc.sum) {
    const auto& n = neu.sum.at(l);
    std::vector<double> v(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) v[k] = a[k] / acc.count - n[k] / neu.count;
    out[l] = v;
  }
  return out;
}

}  // namespace steer::oracle
