#include "steer/trace.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace steer::model {

std::string to_string(Role role) { return role == Role::kPrompt ? "prompt" : "generated"; }

Role role_from_string(const std::string& s) {
  if (s == "prompt") return Role::kPrompt;
  if (s == "generated") return Role::kGenerated;
  throw std::invalid_argument("unknown trace role '" + s + "'");
}

void ActivationTrace::record(int layer, int position, Role role, const num::RowVector& hidden) {
  layers[layer].push_back(TraceEntry{position, role, hidden});
}

std::optional<num::RowVector> ActivationTrace::generated_mean(int layer) const {
  auto it = layers.find(layer);
  if (it == layers.end()) return std::nullopt;
  std::optional<num::RowVector> acc;
  int count = 0;
  for (const auto& e : it->second) {
    if (e.role != Role::kGenerated) continue;
    if (!acc) {
      acc = e.hidden;
    } else {
      *acc += e.hidden;
    }
    ++count;
  }
  if (acc) *acc /= static_cast<double>(count);
  return acc;
}

void write_trace_jsonl(const ActivationTrace& trace, std::ostream& os) {
  for (const auto& [layer, entries] : trace.layers) {
    for (const auto& e : entries) {
      nlohmann::json rec;
      rec["layer"] = layer;
      rec["position"] = e.position;
      rec["role"] = to_string(e.role);
      rec["vector"] = std::vector<double>(e.hidden.data(), e.hidden.data() + e.hidden.size());
      os << rec.dump() << '\n';
    }
  }
}

ActivationTrace read_trace_jsonl(std::istream& is) {
  ActivationTrace trace;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    const auto values = rec.at("vector").get<std::vector<double>>();
    num::RowVector v = Eigen::Map<const num::RowVector>(values.data(), static_cast<Eigen::Index>(values.size()));
    trace.record(rec.at("layer").get<int>(), rec.at("position").get<int>(),
                 role_from_string(rec.at("role").get<std::string>()), v);
  }
  return trace;
}

}  // namespace steer::model
