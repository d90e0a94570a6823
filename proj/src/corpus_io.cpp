#include "steer/corpus_io.hpp"

#include <fstream>

#include "json.hpp"

namespace steer::task {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  return os;
}

template <typename F>
void for_each_record(const std::filesystem::path& path, F&& f) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      f(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

void write_utterances(const std::filesystem::path& path, const std::vector<Utterance>& utterances) {
  auto os = open_out(path);
  for (const auto& u : utterances) {
    nlohmann::json j{{"speaker_id", u.speaker_id}, {"accent_prob", u.accent_prob}, {"text", u.text},
                     {"surface", u.surface}};
    os << j.dump() << '\n';
  }
}

std::vector<Utterance> read_utterances(const std::filesystem::path& path) {
  std::vector<Utterance> out;
  for_each_record(path, [&](const nlohmann::json& j) {
    out.push_back({j.at("speaker_id").get<int>(), j.at("accent_prob").get<double>(),
                   j.at("text").get<Sentence>(), j.at("surface").get<std::vector<int>>()});
  });
  return out;
}

void write_triplets(const std::filesystem::path& path, const std::vector<Triplet>& triplets) {
  auto os = open_out(path);
  for (const auto& t : triplets) {
    nlohmann::json j{{"condition", t.accent_prob > 0.0 ? "accented" : "neutral"},
                     {"speaker_id", t.speaker_id},
                     {"accent_prob", t.accent_prob},
                     {"target_text", t.target_text},
                     {"reference_text", t.reference_text},
                     {"reference_sequence", t.reference_sequence}};
    if (!t.target_sequence.empty()) j["target_sequence"] = t.target_sequence;
    os << j.dump() << '\n';
  }
}

std::vector<Triplet> read_triplets(const std::filesystem::path& path) {
  std::vector<Triplet> out;
  for_each_record(path, [&](const nlohmann::json& j) {
    Triplet t;
    t.speaker_id = j.at("speaker_id").get<int>();
    t.accent_prob = j.at("accent_prob").get<double>();
    t.target_text = j.at("target_text").get<Sentence>();
    t.reference_text = j.at("reference_text").get<Sentence>();
    t.reference_sequence = j.at("reference_sequence").get<std::vector<int>>();
    if (j.contains("target_sequence")) t.target_sequence = j.at("target_sequence").get<std::vector<int>>();
    out.push_back(std::move(t));
  });
  return out;
}

}  // namespace steer::task
