#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "steer/audio/perturb.hpp"
#include "steer/corpus_io.hpp"
#include "steer/digest.hpp"
#include "steer/parallel.hpp"
#include "steer/pipeline.hpp"
#include "steer/sweep.hpp"

namespace steer::cli {

namespace fs = std::filesystem;

namespace {

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Global {
  std::uint64_t seed = 1234;
  int jobs = 1;
  bool no_timestamp = false;
};

std::string timestamp(const Global& g) {
  if (g.no_timestamp) return "";
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw CommandError(std::string(what) + " not found: " + p.string());
}

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw CommandError(std::string(what) + " not found: " + p.string());
}

std::string read_text(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw CommandError("cannot open: " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw CommandError("cannot open for writing: " + p.string());
  os << text;
  if (!os) throw CommandError("write failed: " + p.string());
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

model::LayerSet parse_layers(const std::string& spec, int n_layers) {
  if (spec == "all") return model::all_layers(n_layers);
  model::LayerSet out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int l = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(l);
    } catch (const std::logic_error&) {
      throw CommandError("invalid layer list '" + spec + "'");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw CommandError("empty layer list");
  for (int l : out) {
    if (l < 0 || l >= n_layers) {
      throw CommandError("layer " + std::to_string(l) + " out of range [0, " + std::to_string(n_layers) + ")");
    }
  }
  return out;
}

struct CorpusContext {
  CorpusFiles files;
  task::TaskConfig config;
  task::Vocabulary vocab;
};

CorpusContext open_corpus(const fs::path& dir) {
  require_dir(dir, "corpus directory");
  CorpusContext c{CorpusFiles{dir}, {}, {}};
  require_file(c.files.task(), "corpus task file");
  c.config = task_config_from_json(read_text(c.files.task()));
  c.vocab = c.config.vocabulary();
  return c;
}

fs::path eval_file(const CorpusContext& c, const std::string& condition) {
  return condition == "neutral" ? c.files.eval_neutral() : c.files.eval_accented();
}

std::vector<task::Triplet> take(std::vector<task::Triplet> v, int n) {
  if (n > 0 && static_cast<std::size_t>(n) < v.size()) v.resize(static_cast<std::size_t>(n));
  return v;
}

eval::AttrClassifier load_classifier(const CorpusContext& c, const std::string& path) {
  const fs::path p = path.empty() ? c.files.classifier() : fs::path(path);
  require_file(p, "classifier");
  return eval::AttrClassifier::from_json(read_text(p));
}

struct LoadedModel {
  model::Transformer model;
  std::string digest;
};

LoadedModel load_model(const fs::path& path) {
  require_file(path, "checkpoint");
  return {model::load_checkpoint(path).model, file_sha256(path)};
}

SteeringVectors load_vectors_for(const fs::path& path, const LoadedModel& m, std::ostream& err) {
  require_file(path, "steering-vector file");
  auto vectors = load_vectors(path);
  if (auto warning = check_compatible(vectors, m.model.config().d_model, m.digest)) err << "warning: " << *warning << '\n';
  return vectors;
}

// ---- gen-corpus ----

struct GenCorpusArgs {
  std::string out;
  CorpusSizes sizes;
  task::TaskConfig task;
};

void cmd_gen_corpus(const GenCorpusArgs& a, const Global& g, std::ostream& out) {
  const Corpus c = generate_corpus(a.task, a.sizes, g.seed);
  fs::create_directories(a.out);
  const CorpusFiles files{a.out};
  write_text(files.task(), task_config_json(a.task) + '\n');
  task::write_triplets(files.train(), c.train);
  task::write_triplets(files.extract_accented(), c.extract_accented);
  task::write_triplets(files.extract_neutral(), c.extract_neutral);
  task::write_triplets(files.eval_accented(), c.eval_accented);
  task::write_triplets(files.eval_neutral(), c.eval_neutral);
  std::vector<task::Utterance> utts;
  for (std::size_t i = 0; i < c.classifier_corpus.size(); ++i) {
    const auto& s = c.classifier_corpus[i];
    const bool acc = s.label == eval::AccentClass::kAccented;
    utts.push_back({c.classifier_speakers[i], acc ? a.task.p_acc : 0.0,
                    task::content_words(s.surface, a.task.vocabulary()), s.surface});
  }
  task::write_utterances(files.utterances(), utts);
  const auto fit = eval::train_attr_classifier(c.classifier_corpus, g.seed, a.task.vocabulary());
  write_text(files.classifier(), fit.classifier.to_json() + '\n');

  out << "sentences: " << c.pool.train.size() << " train, " << c.pool.eval.size() << " held out\n";
  auto summarize = [&](const char* name, const std::vector<task::Triplet>& ts) {
    std::map<int, int> per_speaker;
    int accented = 0;
    for (const auto& t : ts) {
      ++per_speaker[t.speaker_id];
      if (t.accent_prob > 0.0) ++accented;
    }
    out << name << ": " << ts.size() << " triplets (" << accented << " accented, " << ts.size() - accented
        << " neutral); per speaker";
    for (const auto& [s, n] : per_speaker) out << ' ' << s << ':' << n;
    out << '\n';
  };
  summarize("train", c.train);
  summarize("extract_accented", c.extract_accented);
  summarize("extract_neutral", c.extract_neutral);
  summarize("eval_accented", c.eval_accented);
  summarize("eval_neutral", c.eval_neutral);
  out << "classifier held-out accuracy: " << fixed(fit.heldout_accuracy) << '\n';
}

// ---- train ----

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string loss_csv;
  std::string resume;
  model::ModelConfig model;
  model::TrainSchedule schedule;
};

void cmd_train(TrainArgs a, const Global& g, std::ostream& out) {
  const auto ctx = open_corpus(a.corpus);
  require_file(ctx.files.train(), "training triplets");
  const auto train_seqs = training_sequences(task::read_triplets(ctx.files.train()), ctx.vocab);
  std::vector<model::TrainingSequence> eval_seqs;
  for (const auto& p : {ctx.files.eval_accented(), ctx.files.eval_neutral()}) {
    require_file(p, "eval triplets");
    auto s = training_sequences(task::read_triplets(p), ctx.vocab);
    eval_seqs.insert(eval_seqs.end(), s.begin(), s.end());
  }

  a.schedule.seed = g.seed;
  a.schedule.jobs = g.jobs;
  model::Transformer m;
  model::TrainState state;
  if (!a.resume.empty()) {
    require_file(a.resume, "resume checkpoint");
    auto ck = model::load_checkpoint(a.resume);
    m = std::move(ck.model);
    if (!ck.optimizer) throw CommandError("resume checkpoint has no optimizer state");
    state.optimizer = std::move(*ck.optimizer);
    state.step = ck.step;
    out << "resuming from step " << state.step << '\n';
  } else {
    a.model.seed = g.seed;
    a.model.vocab_size = ctx.vocab.size();
    m = model::Transformer::init(a.model);
    state.optimizer = num::AdamState::zeros_like(m.weights().flatten());
  }
  if (m.config().vocab_size != ctx.vocab.size()) throw CommandError("checkpoint vocabulary does not match the corpus");

  const fs::path loss_path = a.loss_csv.empty() ? fs::path(a.out + ".loss.csv") : fs::path(a.loss_csv);
  std::ofstream loss(loss_path, std::ios::trunc);
  if (!loss) throw CommandError("cannot open for writing: " + loss_path.string());
  loss << "step,loss,lr\n";
  model::train(m, state, train_seqs, a.schedule, [&](const model::LossPoint& p) {
    loss << p.step << ',' << fixed(p.loss, 6) << ',' << fixed(a.schedule.lr_at(p.step), 8) << '\n';
    out << "step " << p.step << " loss " << fixed(p.loss) << '\n';
  });
  model::save_checkpoint(a.out, m, &state.optimizer, state.step);
  out << "final eval loss: " << fixed(model::mean_loss(m, eval_seqs)) << '\n';
}

// ---- extract ----

struct ExtractArgs {
  std::string checkpoint;
  std::string corpus;
  std::string out;
  std::string json;
  int n_samples = 4000;
  std::string layers = "all";
  bool no_augment = false;
  double temperature = 1.0;
};

void cmd_extract(const ExtractArgs& a, const Global& g, std::ostream& out) {
  const auto ctx = open_corpus(a.corpus);
  const auto m = load_model(a.checkpoint);
  require_file(ctx.files.extract_accented(), "accented extraction triplets");
  require_file(ctx.files.extract_neutral(), "neutral extraction triplets");
  auto acc = task::read_triplets(ctx.files.extract_accented());
  auto neu = task::read_triplets(ctx.files.extract_neutral());
  if (static_cast<std::size_t>(a.n_samples) > std::min(acc.size(), neu.size())) {
    throw CommandError("requested " + std::to_string(a.n_samples) + " samples per condition but the corpus has " +
                       std::to_string(std::min(acc.size(), neu.size())));
  }
  acc = take(std::move(acc), a.n_samples);
  neu = take(std::move(neu), a.n_samples);
  ExtractOptions opt;
  opt.layers = parse_layers(a.layers, m.model.config().n_layers);
  opt.augment = !a.no_augment;
  opt.seed = g.seed;
  opt.temperature = a.temperature;
  opt.kappa = ctx.config.kappa;
  opt.gate_threshold = ctx.config.gate_threshold;
  opt.jobs = g.jobs;
  opt.checkpoint_digest = m.digest;
  opt.created = timestamp(g);
  const auto vectors = extract_vectors(m.model, acc, neu, all_speakers(ctx.config), ctx.vocab, opt);
  save_vectors(vectors, a.out);
  if (!a.json.empty()) write_text(a.json, vectors_to_json(vectors) + '\n');
  const auto& meta = vectors.begin()->second.meta;
  out << "samples used: " << meta.n_accented << " accented, " << meta.n_neutral << " neutral"
      << (opt.augment ? " (augmented)" : "") << '\n';
  for (const auto& [l, v] : vectors) out << "layer " << l << " norm " << fixed(v.values.norm(), 6) << '\n';
}

// ---- steer ----

struct SteerArgs {
  std::string checkpoint;
  std::string vectors;
  std::string corpus;
  std::string condition = "accented";
  int layer = -1;
  double alpha = 1.0;
  std::string direction = "subtract";
  bool unsteered = false;
  std::string out;
  std::string trace_out;
  int n = 0;
};

void cmd_steer(const SteerArgs& a, const Global& g, std::ostream& out, std::ostream& err) {
  const auto ctx = open_corpus(a.corpus);
  const auto m = load_model(a.checkpoint);
  const auto triplets = take(task::read_triplets(eval_file(ctx, a.condition)), a.n);
  const int layer = a.layer >= 0 ? a.layer : m.model.config().n_layers / 2;

  SteeringVectors vectors;
  std::optional<model::LayerHook> hook;
  std::atomic<long> guard{0};
  if (!a.unsteered) {
    if (a.vectors.empty()) throw CommandError("--vectors is required unless --unsteered is given");
    vectors = load_vectors_for(a.vectors, m, err);
    const auto it = vectors.find(layer);
    if (it == vectors.end()) throw CommandError("no steering vector for layer " + std::to_string(layer));
    SteerConfig cfg;
    cfg.layer = layer;
    cfg.alpha = a.alpha;
    cfg.sign = sign_from_string(a.direction);
    hook = make_steering_hook(it->second, cfg, &guard);
  }
  EvalOptions eo;
  eo.seed = g.seed;
  eo.jobs = g.jobs;
  if (!a.trace_out.empty()) eo.tap = {layer};
  const auto run = run_condition(m.model, triplets, ctx.vocab, eo, hook ? &*hook : nullptr);

  std::ofstream os(a.out, std::ios::trunc);
  if (!os) throw CommandError("cannot open for writing: " + a.out);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const auto& r = run.records[i].result;
    ok += r.ok() ? 1 : 0;
    nlohmann::json j{{"index", i},
                     {"speaker_id", triplets[i].speaker_id},
                     {"status", r.ok() ? "ok" : "budget_exhausted"},
                     {"steps_used", r.steps_used},
                     {"tokens", r.tokens}};
    os << j.dump() << '\n';
  }
  if (!a.trace_out.empty()) {
    std::ofstream ts(a.trace_out, std::ios::trunc);
    if (!ts) throw CommandError("cannot open for writing: " + a.trace_out);
    for (std::size_t i = 0; i < run.records.size(); ++i) {
      const auto& trace = run.records[i].result.trace;
      if (!trace) continue;
      std::stringstream ss;
      model::write_trace_jsonl(*trace, ss);
      std::string line;
      while (std::getline(ss, line)) ts << "{\"sample\":" << i << ',' << line.substr(1) << '\n';
    }
  }
  out << "generated " << run.records.size() << " samples (" << ok << " ok), norm-guard events " << guard.load()
      << '\n';
}

// ---- sweep / evaluate ----

struct SweepArgs {
  std::string checkpoint;
  std::string vectors;
  std::string corpus;
  std::string condition = "accented";
  std::string layers = "all";
  std::vector<double> alphas{1.0, 2.0};
  std::string direction = "subtract";
  std::string classifier;
  std::string out;
  int n_eval = 0;
  int max_conditions = 0;
  bool fresh = false;
};

void cmd_sweep(const SweepArgs& a, const Global& g, std::ostream& out, std::ostream& err) {
  const auto ctx = open_corpus(a.corpus);
  const auto m = load_model(a.checkpoint);
  const auto vectors = load_vectors_for(a.vectors, m, err);
  const auto clf = load_classifier(ctx, a.classifier);
  const auto eval_set = take(task::read_triplets(eval_file(ctx, a.condition)), a.n_eval);
  SweepGrid grid;
  grid.layers = parse_layers(a.layers, m.model.config().n_layers);
  grid.alphas = a.alphas;
  SweepOptions opt;
  opt.eval.seed = g.seed;
  opt.eval.jobs = g.jobs;
  opt.sign = sign_from_string(a.direction);
  opt.max_new_conditions = static_cast<std::size_t>(a.max_conditions);
  if (a.fresh) fs::remove(a.out);
  const auto rows = sweep(m.model, vectors, grid, eval_set, ctx.vocab, clf, opt, fs::path(a.out));
  out << eval::kCsvHeader << '\n';
  for (const auto& r : rows) out << eval::csv_line(r) << '\n';
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string vectors;
  std::string corpus;
  std::string condition = "accented";
  int layer = -1;
  double alpha = 1.0;
  std::string direction = "subtract";
  std::string classifier;
  std::string out;
  int n_eval = 0;
};

void check_split_hygiene(const CorpusContext& ctx, const std::vector<task::Triplet>& eval_set) {
  require_file(ctx.files.train(), "training triplets");
  std::set<task::Sentence> seen;
  for (const auto& t : task::read_triplets(ctx.files.train())) {
    seen.insert(t.target_text);
    seen.insert(t.reference_text);
  }
  for (const auto& t : eval_set) {
    if (seen.contains(t.target_text) || seen.contains(t.reference_text)) {
      throw CommandError("evaluation triplet overlaps the training sentences");
    }
  }
}

void cmd_evaluate(const EvaluateArgs& a, const Global& g, std::ostream& out, std::ostream& err) {
  const auto ctx = open_corpus(a.corpus);
  const auto m = load_model(a.checkpoint);
  const auto clf = load_classifier(ctx, a.classifier);
  const auto eval_set = take(task::read_triplets(eval_file(ctx, a.condition)), a.n_eval);
  check_split_hygiene(ctx, eval_set);
  EvalOptions eo;
  eo.seed = g.seed;
  eo.jobs = g.jobs;
  SteeringVectors vectors;
  std::optional<SteeringChoice> choice;
  if (!a.vectors.empty()) {
    vectors = load_vectors_for(a.vectors, m, err);
    SteerConfig cfg;
    cfg.layer = a.layer >= 0 ? a.layer : m.model.config().n_layers / 2;
    cfg.alpha = a.alpha;
    cfg.sign = sign_from_string(a.direction);
    const auto it = vectors.find(cfg.layer);
    if (it == vectors.end()) throw CommandError("no steering vector for layer " + std::to_string(cfg.layer));
    choice = SteeringChoice{&it->second, cfg};
  }
  const auto row = evaluate_condition(m.model, eval_set, ctx.vocab, clf, eo, choice);
  if (!a.out.empty()) eval::write_rows_csv({row}, a.out);
  out << eval::kCsvHeader << '\n' << eval::csv_line(row) << '\n';
}

// ---- report ----

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out_csv;
  std::string out_json;
  std::string checkpoint;
  std::string vectors;
};

void cmd_report(const ReportArgs& a, const Global& g, std::ostream& out) {
  std::vector<eval::EvalRow> rows;
  std::map<std::string, std::string> seen;
  for (const auto& in : a.inputs) {
    require_file(in, "sweep CSV");
    for (auto& r : eval::read_rows_csv(in)) {
      const std::string key = (r.layer ? std::to_string(*r.layer) : "") + "," + (r.alpha ? fixed(*r.alpha) : "");
      const std::string line = eval::csv_line(r);
      const auto [it, inserted] = seen.emplace(key, line);
      if (!inserted) {
        if (it->second != line) throw CommandError("conflicting rows for condition '" + key + "' across inputs");
        continue;
      }
      rows.push_back(std::move(r));
    }
  }
  if (rows.empty()) throw CommandError("no rows to report");
  eval::ReportMeta meta;
  meta.seed = g.seed;
  if (!a.checkpoint.empty()) {
    require_file(a.checkpoint, "checkpoint");
    meta.checkpoint_digest = file_sha256(a.checkpoint);
  }
  if (!a.vectors.empty()) {
    require_file(a.vectors, "steering-vector file");
    meta.vectors_digest = file_sha256(a.vectors);
  }
  eval::report(rows, a.out_csv, a.out_json, meta);
  out << "wrote " << rows.size() << " rows\n";
}

// ---- augment-audio ----

struct AugmentArgs {
  std::string in;
  std::string out;
  std::string log;
  audio::PerturbConfig config;
  std::string encoding = "pcm16";
};

void cmd_augment_audio(const AugmentArgs& a, const Global& g, std::ostream& out) {
  require_dir(a.in, "input directory");
  a.config.validate();
  fs::create_directories(a.out);
  std::vector<fs::path> inputs;
  for (const auto& e : fs::directory_iterator(a.in)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") inputs.push_back(e.path());
  }
  std::sort(inputs.begin(), inputs.end());
  const auto encoding = a.encoding == "float32" ? audio::WavEncoding::kFloat32 : audio::WavEncoding::kPcm16;
  std::vector<std::string> log_lines(inputs.size());
  std::vector<int> applied(inputs.size(), 0);
  parallel_for(inputs.size(), g.jobs, [&](std::size_t i) {
    const auto name = inputs[i].filename().string();
    Rng rng(g.seed, stream_id("augment-audio/" + name));
    const auto wave = audio::read_wav(inputs[i]);
    const auto result = audio::perturb(wave, a.config, rng);
    audio::write_wav(result.wave, fs::path(a.out) / name, encoding);
    log_lines[i] = result.params.to_json(name);
    applied[i] = result.params.applied ? 1 : 0;
  });
  const fs::path log_path = a.log.empty() ? fs::path(a.out) / "params.jsonl" : fs::path(a.log);
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw CommandError("cannot open for writing: " + log_path.string());
  for (const auto& l : log_lines) log << l << '\n';
  const int n_applied = std::accumulate(applied.begin(), applied.end(), 0);
  out << "processed " << inputs.size() << " files, perturbation applied to " << n_applied << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Activation-steering toolkit for the synthetic accent/timbre task"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  Global g;
  app.add_option("--seed", g.seed, "Top-level seed for every random stream")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--no-timestamp", g.no_timestamp, "Omit wall-clock timestamps from artifacts");

  GenCorpusArgs gc;
  auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic corpus, triplet files and classifier");
  gen->add_option("--out", gc.out, "Output directory")->required();
  gen->add_option("--n-sentences", gc.sizes.n_sentences)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--eval-fraction", gc.sizes.eval_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gen->add_option("--n-train", gc.sizes.n_train)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--n-extract", gc.sizes.n_extract, "Extraction triplets per condition")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--n-eval", gc.sizes.n_eval, "Eval triplets per condition")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--n-classifier", gc.sizes.n_classifier)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--n-words", gc.task.n_words)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--min-words", gc.task.min_words)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--max-words", gc.task.max_words)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--p-acc", gc.task.p_acc)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gen->add_option("--kappa", gc.task.kappa)->check(CLI::PositiveNumber)->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the toy transformer");
  train->add_option("--corpus", ta.corpus)->required();
  train->add_option("--out", ta.out, "Checkpoint path")->required();
  train->add_option("--loss-csv", ta.loss_csv, "Loss curve (default: <out>.loss.csv)");
  train->add_option("--resume", ta.resume, "Continue from this checkpoint");
  train->add_option("--n-layers", ta.model.n_layers)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--d-model", ta.model.d_model)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--n-heads", ta.model.n_heads)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--d-ff", ta.model.d_ff)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--steps", ta.schedule.steps)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--batch-size", ta.schedule.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--lr", ta.schedule.lr)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--warmup", ta.schedule.warmup)->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--min-lr-ratio", ta.schedule.min_lr_ratio)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  train->add_option("--grad-clip", ta.schedule.grad_clip)->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--log-every", ta.schedule.log_every)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--stop-after", ta.schedule.stop_at, "Halt after this many updates; resume later with --resume")
      ->check(CLI::NonNegativeNumber);

  ExtractArgs xa;
  auto* extract = app.add_subcommand("extract", "Extract per-layer steering vectors");
  extract->add_option("--checkpoint", xa.checkpoint)->required();
  extract->add_option("--corpus", xa.corpus)->required();
  extract->add_option("--out", xa.out, "Steering-vector file")->required();
  extract->add_option("--json", xa.json, "Also write a JSON export");
  extract->add_option("--n-samples", xa.n_samples, "Samples per condition")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  extract->add_option("--layers", xa.layers, "'all' or a comma-separated list")->capture_default_str();
  extract->add_flag("--no-augment", xa.no_augment, "Disable reference perturbation");
  extract->add_option("--temperature", xa.temperature)->check(CLI::PositiveNumber)->capture_default_str();

  SteerArgs sa;
  auto* steer_cmd = app.add_subcommand("steer", "Generate with single-layer steering");
  steer_cmd->add_option("--checkpoint", sa.checkpoint)->required();
  steer_cmd->add_option("--vectors", sa.vectors);
  steer_cmd->add_option("--corpus", sa.corpus)->required();
  steer_cmd->add_option("--condition", sa.condition)->check(CLI::IsMember({"accented", "neutral"}))->capture_default_str();
  steer_cmd->add_option("--layer", sa.layer, "Steered layer (default: n_layers / 2)");
  steer_cmd->add_option("--alpha", sa.alpha)->check(CLI::NonNegativeNumber)->capture_default_str();
  steer_cmd->add_option("--direction", sa.direction)->check(CLI::IsMember({"subtract", "add"}))->capture_default_str();
  steer_cmd->add_flag("--unsteered", sa.unsteered, "Generate without a hook");
  steer_cmd->add_option("--out", sa.out, "Generations (JSON Lines)")->required();
  steer_cmd->add_option("--trace-out", sa.trace_out, "Activation trace of the steered layer (JSON Lines)");
  steer_cmd->add_option("--n", sa.n, "Limit the number of prompts (0 = all)")->check(CLI::NonNegativeNumber);

  SweepArgs wa;
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a layer x alpha grid plus the unsteered baseline");
  sweep_cmd->add_option("--checkpoint", wa.checkpoint)->required();
  sweep_cmd->add_option("--vectors", wa.vectors)->required();
  sweep_cmd->add_option("--corpus", wa.corpus)->required();
  sweep_cmd->add_option("--condition", wa.condition)->check(CLI::IsMember({"accented", "neutral"}))->capture_default_str();
  sweep_cmd->add_option("--layers", wa.layers)->capture_default_str();
  sweep_cmd->add_option("--alphas", wa.alphas)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--direction", wa.direction)->check(CLI::IsMember({"subtract", "add"}))->capture_default_str();
  sweep_cmd->add_option("--classifier", wa.classifier, "Classifier JSON (default: corpus classifier)");
  sweep_cmd->add_option("--out", wa.out, "Sweep CSV; an existing partial file is resumed")->required();
  sweep_cmd->add_option("--n-eval", wa.n_eval, "Limit eval prompts (0 = all)")->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--max-conditions", wa.max_conditions, "Stop after this many new conditions (0 = all)")
      ->check(CLI::NonNegativeNumber);
  sweep_cmd->add_flag("--fresh", wa.fresh, "Discard an existing sweep file");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate one condition on the held-out split");
  evaluate->add_option("--checkpoint", ea.checkpoint)->required();
  evaluate->add_option("--vectors", ea.vectors, "Steering vectors (omit for the unsteered baseline)");
  evaluate->add_option("--corpus", ea.corpus)->required();
  evaluate->add_option("--condition", ea.condition)->check(CLI::IsMember({"accented", "neutral"}))->capture_default_str();
  evaluate->add_option("--layer", ea.layer, "Steered layer (default: n_layers / 2)");
  evaluate->add_option("--alpha", ea.alpha)->check(CLI::NonNegativeNumber)->capture_default_str();
  evaluate->add_option("--direction", ea.direction)->check(CLI::IsMember({"subtract", "add"}))->capture_default_str();
  evaluate->add_option("--classifier", ea.classifier);
  evaluate->add_option("--out", ea.out, "Row CSV");
  evaluate->add_option("--n-eval", ea.n_eval)->check(CLI::NonNegativeNumber);

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Merge sweep CSVs into a CSV + JSON report");
  report->add_option("--in", ra.inputs, "Sweep CSV files")->required();
  report->add_option("--out-csv", ra.out_csv)->required();
  report->add_option("--out-json", ra.out_json)->required();
  report->add_option("--checkpoint", ra.checkpoint, "Checkpoint to record by digest");
  report->add_option("--vectors", ra.vectors, "Steering-vector file to record by digest");

  AugmentArgs aa;
  auto* augment = app.add_subcommand("augment-audio", "Apply the gated speaker perturbation to a directory of WAVs");
  augment->add_option("--in", aa.in, "Input directory")->required();
  augment->add_option("--out", aa.out, "Output directory")->required();
  augment->add_option("--log", aa.log, "Parameter log (default: <out>/params.jsonl)");
  augment->add_option("--formant-lo", aa.config.formant_lo)->check(CLI::Range(0.7, 1.4))->capture_default_str();
  augment->add_option("--formant-hi", aa.config.formant_hi)->check(CLI::Range(0.7, 1.4))->capture_default_str();
  augment->add_option("--f0-lo", aa.config.f0_lo)->check(CLI::Range(0.5, 2.0))->capture_default_str();
  augment->add_option("--f0-hi", aa.config.f0_hi)->check(CLI::Range(0.5, 2.0))->capture_default_str();
  augment->add_option("--eq-bands", aa.config.eq.n_bands)->check(CLI::NonNegativeNumber)->capture_default_str();
  augment->add_option("--gate", aa.config.gate_threshold)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  augment->add_option("--encoding", aa.encoding)->check(CLI::IsMember({"pcm16", "float32"}))->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*gen) cmd_gen_corpus(gc, g, out);
    if (*train) cmd_train(ta, g, out);
    if (*extract) cmd_extract(xa, g, out);
    if (*steer_cmd) cmd_steer(sa, g, out, err);
    if (*sweep_cmd) cmd_sweep(wa, g, out, err);
    if (*evaluate) cmd_evaluate(ea, g, out, err);
    if (*report) cmd_report(ra, g, out);
    if (*augment) cmd_augment_audio(aa, g, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitOk;
}

}  // namespace steer::cli
