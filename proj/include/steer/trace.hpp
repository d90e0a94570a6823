#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steer/kernels.hpp"

namespace steer::model {

enum class Role { kPrompt, kGenerated };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

struct TraceEntry {
  int position = 0;
  Role role = Role::kPrompt;
  num::RowVector hidden;
};

// Per-layer, per-position block outputs (post-residual, pre final norm).
struct ActivationTrace {
  std::map<int, std::vector<TraceEntry>> layers;

  bool empty() const { return layers.empty(); }
  void record(int layer, int position, Role role, const num::RowVector& hidden);
  // Token-mean over entries with role == generated; nullopt when none.
  std::optional<num::RowVector> generated_mean(int layer) const;
};

// JSON Lines: one {"layer","position","role","vector"} record per entry,
// ordered by layer then position. Reals are printed round-trip exact.
void write_trace_jsonl(const ActivationTrace& trace, std::ostream& os);
ActivationTrace read_trace_jsonl(std::istream& is);

}  // namespace steer::model
