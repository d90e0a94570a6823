#include "steer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "steer/rng.hpp"

namespace steer::eval {

AccentClass AttrClassifier::decide(double accented_fraction) const {
  if (kind == Kind::kThreshold) return accented_fraction >= threshold ? AccentClass::kAccented : AccentClass::kNeutral;
  return weight * accented_fraction + bias >= 0.0 ? AccentClass::kAccented : AccentClass::kNeutral;
}

std::optional<AccentClass> AttrClassifier::classify(std::span<const int> sequence,
                                                    const task::Vocabulary& vocab) const {
  const auto stats = task::surface_stats(sequence, vocab);
  if (stats.content == 0) return std::nullopt;
  return decide(stats.accented_fraction());
}

std::string AttrClassifier::to_json() const {
  nlohmann::json j{{"kind", kind == Kind::kThreshold ? "threshold" : "logistic"},
                   {"threshold", threshold},
                   {"weight", weight},
                   {"bias", bias}};
  return j.dump(2);
}

AttrClassifier AttrClassifier::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  AttrClassifier c;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "threshold") {
    c.kind = Kind::kThreshold;
  } else if (kind == "logistic") {
    c.kind = Kind::kLogistic;
  } else {
    throw EvalError("unknown classifier kind '" + kind + "'");
  }
  c.threshold = j.at("threshold").get<double>();
  c.weight = j.at("weight").get<double>();
  c.bias = j.at("bias").get<double>();
  return c;
}

ClassifierFit train_attr_classifier(std::span<const LabeledSequence> corpus, std::uint64_t seed,
                                    const task::Vocabulary& vocab) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& s : corpus) {
    const auto stats = task::surface_stats(s.surface, vocab);
    if (stats.content == 0) continue;
    x.push_back(stats.accented_fraction());
    y.push_back(s.label == AccentClass::kAccented ? 1.0 : 0.0);
  }
  const double positives = std::accumulate(y.begin(), y.end(), 0.0);
  if (positives == 0.0 || positives == static_cast<double>(y.size())) {
    throw EvalError("train_attr_classifier: corpus must contain both classes");
  }
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, stream_id("eval.classifier"));
  rng.shuffle(order);
  const std::size_t n_heldout = std::max<std::size_t>(1, order.size() / 5);
  const std::size_t n_train = order.size() - n_heldout;
  if (n_train == 0) throw EvalError("train_attr_classifier: corpus too small");

  // Newton-Raphson on the ridge-penalized negative log-likelihood.
  constexpr double kRidge = 1e-3;
  double w = 0.0, b = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double gw = kRidge * w, gb = 0.0;
    double hww = kRidge, hwb = 0.0, hbb = 1e-12;
    for (std::size_t k = 0; k < n_train; ++k) {
      const std::size_t i = order[k];
      const double p = 1.0 / (1.0 + std::exp(-(w * x[i] + b)));
      const double r = p - y[i];
      const double s = p * (1.0 - p);
      gw += r * x[i];
      gb += r;
      hww += s * x[i] * x[i];
      hwb += s * x[i];
      hbb += s;
    }
    const double det = hww * hbb - hwb * hwb;
    if (!(std::abs(det) > 1e-300)) break;
    const double dw = (hbb * gw - hwb * gb) / det;
    const double db = (hww * gb - hwb * gw) / det;
    w -= dw;
    b -= db;
    if (std::abs(dw) + std::abs(db) < 1e-12) break;
  }
  ClassifierFit fit;
  fit.classifier = AttrClassifier{AttrClassifier::Kind::kLogistic, 0.5, w, b};
  fit.n_train = n_train;
  fit.n_heldout = n_heldout;
  std::size_t correct = 0;
  for (std::size_t k = n_train; k < order.size(); ++k) {
    const std::size_t i = order[k];
    const bool pred = fit.classifier.decide(x[i]) == AccentClass::kAccented;
    if (pred == (y[i] > 0.5)) ++correct;
  }
  fit.heldout_accuracy = static_cast<double>(correct) / static_cast<double>(n_heldout);
  return fit;
}

double isr(std::span<const model::GenerationResult> results) {
  if (results.empty()) throw EvalError("isr: no generation results");
  const auto ok = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.ok(); });
  return static_cast<double>(ok) / static_cast<double>(results.size());
}

AmrResult amr(std::span<const std::vector<int>> sequences, const AttrClassifier& clf, AccentClass target,
              const task::Vocabulary& vocab) {
  AmrResult r;
  r.total = sequences.size();
  for (const auto& s : sequences) {
    const auto cls = clf.classify(s, vocab);
    if (!cls) {
      ++r.malformed;
    } else if (*cls == target) {
      ++r.matched;
    }
  }
  r.rate = r.total > 0 ? static_cast<double>(r.matched) / static_cast<double>(r.total) : 0.0;
  return r;
}

std::vector<double> speaker_embedding(std::span<const int> sequence, const task::Vocabulary& vocab) {
  auto h = task::timbre_histogram(sequence, vocab);
  double norm = 0.0;
  for (double v : h) norm += v * v;
  if (norm == 0.0) throw EvalError("speaker_embedding: sequence has no timbre symbols");
  norm = std::sqrt(norm);
  for (auto& v : h) v /= norm;
  return h;
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw EvalError("cosine_sim: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw EvalError("cosine_sim: zero vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double content_error_rate(std::span<const int> hyp, std::span<const int> ref) {
  if (ref.empty()) throw EvalError("content_error_rate: empty reference");
  std::vector<std::size_t> prev(ref.size() + 1), cur(ref.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[ref.size()]) / static_cast<double>(ref.size());
}

EvalRow summarize(std::string label, std::optional<int> layer, std::optional<double> alpha,
                  std::span<const GenerationRecord> records, const AttrClassifier& clf, const task::Vocabulary& vocab,
                  long norm_guard_events) {
  if (records.empty()) throw EvalError("summarize: no records");
  EvalRow row;
  row.label = std::move(label);
  row.layer = layer;
  row.alpha = alpha;
  row.n_samples = records.size();
  row.norm_guard_events = norm_guard_events;
  std::vector<model::GenerationResult> results;
  std::vector<std::vector<int>> ok_sequences;
  double sim = 0.0, cer = 0.0;
  for (const auto& rec : records) {
    results.push_back(rec.result);
    if (!rec.result.ok()) continue;
    ok_sequences.push_back(rec.result.tokens);
    const auto ref_emb = speaker_embedding(rec.reference_sequence, vocab);
    double s = 0.0;
    if (task::surface_stats(rec.result.tokens, vocab).timbre > 0) {
      s = cosine_sim(speaker_embedding(rec.result.tokens, vocab), ref_emb);
    }
    sim += s;
    cer += content_error_rate(task::content_words(rec.result.tokens, vocab), rec.target_text);
  }
  row.isr = isr(results);
  row.n_success = ok_sequences.size();
  if (row.n_success > 0) {
    const double n = static_cast<double>(row.n_success);
    row.amr_accented = amr(ok_sequences, clf, AccentClass::kAccented, vocab).rate;
    row.amr_neutral = amr(ok_sequences, clf, AccentClass::kNeutral, vocab).rate;
    row.spk_sim = sim / n;
    row.cer = cer / n;
  }
  return row;
}

// ---- reporting ----

namespace {

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string label_for(const EvalRow& r) {
  if (r.is_baseline()) return "unsteered";
  return "layer" + std::to_string(*r.layer) + "_alpha" + fixed4(r.alpha.value_or(0.0));
}

}  // namespace

std::string csv_line(const EvalRow& r) {
  std::ostringstream os;
  os << (r.layer ? std::to_string(*r.layer) : "") << ',' << (r.alpha ? fixed4(*r.alpha) : "") << ','
     << fixed4(r.isr) << ',' << fixed4(r.amr_accented) << ',' << fixed4(r.amr_neutral) << ',' << fixed4(r.spk_sim)
     << ',' << fixed4(r.cer) << ',' << r.norm_guard_events;
  return os.str();
}

EvalRow parse_csv_line(const std::string& line) {
  const auto f = split_csv(line);
  if (f.size() != 8) throw EvalError("malformed sweep CSV line: '" + line + "'");
  EvalRow r;
  if (!f[0].empty()) r.layer = std::stoi(f[0]);
  if (!f[1].empty()) r.alpha = std::stod(f[1]);
  r.isr = std::stod(f[2]);
  r.amr_accented = std::stod(f[3]);
  r.amr_neutral = std::stod(f[4]);
  r.spk_sim = std::stod(f[5]);
  r.cer = std::stod(f[6]);
  r.norm_guard_events = std::stol(f[7]);
  r.label = label_for(r);
  return r;
}

std::vector<EvalRow> read_rows_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw EvalError("unexpected sweep CSV header in " + path.string());
  std::vector<EvalRow> rows;
  while (std::getline(is, line)) {
    if (!line.empty()) rows.push_back(parse_csv_line(line));
  }
  return rows;
}

std::vector<EvalRow> ordered_rows(std::vector<EvalRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
    if (a.is_baseline() != b.is_baseline()) return a.is_baseline();
    if (a.is_baseline()) return false;
    if (*a.layer != *b.layer) return *a.layer < *b.layer;
    return a.alpha.value_or(0.0) < b.alpha.value_or(0.0);
  });
  return rows;
}

void write_rows_csv(const std::vector<EvalRow>& rows, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << kCsvHeader << '\n';
  for (const auto& r : rows) os << csv_line(r) << '\n';
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

void report(const std::vector<EvalRow>& rows, const std::filesystem::path& csv_path,
            const std::filesystem::path& json_path, const ReportMeta& meta) {
  if (rows.empty()) throw EvalError("report: no rows");
  const auto ordered = ordered_rows(rows);
  write_rows_csv(ordered, csv_path);
  nlohmann::json j;
  j["metadata"] = {{"seed", meta.seed},
                   {"checkpoint_digest", meta.checkpoint_digest},
                   {"vectors_digest", meta.vectors_digest}};
  nlohmann::json conds = nlohmann::json::array();
  std::map<std::string, nlohmann::json> series;
  for (const auto& r : ordered) {
    nlohmann::json c{{"label", r.label.empty() ? label_for(r) : r.label},
                     {"layer", r.layer ? nlohmann::json(*r.layer) : nlohmann::json(nullptr)},
                     {"alpha", r.alpha ? nlohmann::json(*r.alpha) : nlohmann::json(nullptr)},
                     {"isr", r.isr},
                     {"amr_accented", r.amr_accented},
                     {"amr_neutral", r.amr_neutral},
                     {"spk_sim", r.spk_sim},
                     {"cer", r.cer},
                     {"n_samples", r.n_samples},
                     {"norm_guard_events", r.norm_guard_events}};
    conds.push_back(c);
    if (!r.is_baseline()) {
      auto& s = series[fixed4(r.alpha.value_or(0.0))];
      s["layer"].push_back(*r.layer);
      for (const char* k : {"isr", "amr_accented", "amr_neutral", "spk_sim", "cer"}) s[k].push_back(c[k]);
    }
  }
  j["conditions"] = conds;
  nlohmann::json layerwise = nlohmann::json::object();
  for (auto& [alpha, s] : series) layerwise[alpha] = s;
  j["layerwise"] = layerwise;
  std::ofstream os(json_path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + json_path.string());
  os << j.dump(2) << '\n';
}

}  // namespace steer::eval
