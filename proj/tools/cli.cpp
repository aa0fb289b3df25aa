#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyner/bts.hpp"
#include "polyner/checkpoint.hpp"
#include "polyner/corpus.hpp"
#include "polyner/errors.hpp"
#include "polyner/eval.hpp"
#include "polyner/rng.hpp"
#include "polyner/syncorpus.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace polyner::cli {

namespace {

void bad_config(const std::string& message) {
  throw Error(ErrorKind::InvalidConfig, message);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::IoError, "cannot read " + path);
  return buffer.str();
}

std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

// ---- experiment configs ----

TaggerConfig arch_from_json(const json& j) {
  if (!j.is_object()) bad_config("arch must be an object");
  if (!j.contains("variant")) bad_config("arch needs a 'variant'");
  TaggerConfig config = variant_config(j.at("variant").get<std::string>());
  bool hier = config.arch == Architecture::hiercrf;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "variant") continue;
      else if (hier && key == "subtoken_layers") config.hiercrf.subtoken_layers = value.get<std::size_t>();
      else if (hier && key == "subtoken_hidden") config.hiercrf.subtoken_hidden = value.get<std::size_t>();
      else if (hier && key == "sentence_layers") config.hiercrf.sentence_layers = value.get<std::size_t>();
      else if (hier && key == "sentence_hidden") config.hiercrf.sentence_hidden = value.get<std::size_t>();
      else if (hier && key == "embedding_dim") config.hiercrf.embedding_dim = value.get<std::size_t>();
      else if (hier && key == "language_specific_transitions") {
        config.hiercrf.language_specific_transitions = value.get<bool>();
      }
      else if (!hier && key == "layers") config.charner.layers = value.get<std::size_t>();
      else if (!hier && key == "hidden") config.charner.hidden = value.get<std::size_t>();
      else if (!hier && key == "embedding_dim") config.charner.embedding_dim = value.get<std::size_t>();
      else if (!hier && key == "byte_dropout") config.charner.byte_dropout = value.get<double>();
      else if (!hier && key == "interior_dropout") config.charner.interior_dropout = value.get<double>();
      else if (!hier && key == "final_dropout") config.charner.final_dropout = value.get<double>();
      else bad_config("unknown arch key '" + key + "' for variant " + variant_name(config));
    }
  } catch (const json::exception& e) {
    bad_config(std::string("bad arch value: ") + e.what());
  }
  return config;
}

ordered_json arch_json(const TaggerConfig& config) {
  ordered_json j;
  j["variant"] = variant_name(config);
  if (config.arch == Architecture::hiercrf) {
    j["subtoken_layers"] = config.hiercrf.subtoken_layers;
    j["subtoken_hidden"] = config.hiercrf.subtoken_hidden;
    j["sentence_layers"] = config.hiercrf.sentence_layers;
    j["sentence_hidden"] = config.hiercrf.sentence_hidden;
    j["embedding_dim"] = config.hiercrf.embedding_dim;
    j["language_specific_transitions"] = config.hiercrf.language_specific_transitions;
  } else {
    j["layers"] = config.charner.layers;
    j["hidden"] = config.charner.hidden;
    j["embedding_dim"] = config.charner.embedding_dim;
    j["byte_dropout"] = config.charner.byte_dropout;
    j["interior_dropout"] = config.charner.interior_dropout;
    j["final_dropout"] = config.charner.final_dropout;
  }
  return j;
}

void train_from_json(const json& j, TrainConfig& config) {
  if (!j.is_object()) bad_config("train must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "lr") config.adam.lr = value.get<double>();
      else if (key == "beta1") config.adam.beta1 = value.get<double>();
      else if (key == "beta2") config.adam.beta2 = value.get<double>();
      else if (key == "epsilon") config.adam.eps = value.get<double>();
      else if (key == "max_epochs") config.max_epochs = value.get<std::size_t>();
      else if (key == "patience") config.patience = value.get<std::size_t>();
      else if (key == "seeds") config.seeds = value.get<std::vector<std::uint64_t>>();
      else if (key == "uniform_sampling") config.uniform_sampling = value.get<bool>();
      else if (key == "finetune_lr") {
        if (value.is_null()) config.finetune_lr.reset();
        else config.finetune_lr = value.get<double>();
      }
      else if (key == "reset_optimizer") config.reset_optimizer = value.get<bool>();
      else bad_config("unknown train key '" + key + "'");
    }
  } catch (const json::exception& e) {
    bad_config(std::string("bad train value: ") + e.what());
  }
}

ordered_json train_json(const TrainConfig& config) {
  ordered_json j;
  j["lr"] = config.adam.lr;
  j["beta1"] = config.adam.beta1;
  j["beta2"] = config.adam.beta2;
  j["epsilon"] = config.adam.eps;
  j["max_epochs"] = config.max_epochs;
  j["patience"] = config.patience;
  j["seeds"] = config.seeds;
  j["uniform_sampling"] = config.uniform_sampling;
  if (config.finetune_lr.has_value()) j["finetune_lr"] = *config.finetune_lr;
  else j["finetune_lr"] = nullptr;
  j["reset_optimizer"] = config.reset_optimizer;
  return j;
}

ordered_json experiment_canonical(const ExperimentSpec& spec, bool include_out) {
  ordered_json j;
  j["regime"] = spec.regime;
  j["data"] = spec.data;
  j["entity_types"] = spec.entity_types;
  if (spec.arch.has_value()) j["arch"] = arch_json(*spec.arch);
  else j["arch"] = nullptr;
  j["train"] = train_json(spec.train);
  j["base_checkpoint"] = spec.base_checkpoint;
  j["target_language"] = spec.target_language;
  if (include_out) j["out"] = spec.out;
  return j;
}

std::uint64_t experiment_hash(const ExperimentSpec& spec) {
  return fnv1a64(experiment_canonical(spec, false).dump());
}

// ---- run manifests ----

std::string run_manifest(const std::string& command, std::uint64_t config_hash,
                         const std::vector<std::uint64_t>& seeds,
                         const std::vector<std::string>& outputs) {
  ordered_json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["checkpoint_format"] = 1;
  j["command"] = command;
  j["config_hash"] = hex64(config_hash);
  j["seeds"] = seeds;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

// Collects files written under one output root, then seals the run with a
// manifest naming them all.
struct OutputDir {
  fs::path root;
  std::vector<std::string> files;

  explicit OutputDir(const std::string& dir) : root(dir) {
    if (dir.empty()) bad_config("output directory required (--out or config 'out')");
  }
  void write(const std::string& rel, const std::string& content) {
    write_atomic((root / rel).string(), content);
    files.push_back(rel);
  }
  void seal(const std::string& command, std::uint64_t config_hash,
            const std::vector<std::uint64_t>& seeds) {
    write_atomic((root / "manifest.json").string(),
                 run_manifest(command, config_hash, seeds, files));
  }
};

// ---- shared runner pieces ----

std::string language_from_dir(const std::string& dir, const std::string& override_code) {
  if (!override_code.empty()) return override_code;
  fs::path p(dir);
  std::string name = p.filename().string();
  if (name.empty()) name = p.parent_path().filename().string();
  if (name.empty()) bad_config("cannot infer a language code from '" + dir + "'; pass --lang");
  return name;
}

std::vector<TrainResult> run_regime(const ExperimentSpec& spec, std::ostream& err) {
  TagSet tagset(spec.entity_types);
  TrainConfig config = spec.train;
  std::vector<TrainResult> runs;

  if (spec.regime == "finetune") {
    Checkpoint base = load_checkpoint(spec.base_checkpoint);
    config.model = base.config;
    LabeledCorpus target = load_corpus_dir(spec.data.at(spec.target_language),
                                           spec.target_language, tagset, {"train", "dev"});
    for (std::uint64_t seed : config.seeds) {
      err << "# finetune " << spec.target_language << " seed " << seed << "\n";
      runs.push_back(finetune(base, target, config, seed));
    }
    return runs;
  }

  config.model = *spec.arch;
  std::vector<LabeledCorpus> corpora;
  for (const auto& [code, dir] : spec.data) {
    corpora.push_back(load_corpus_dir(dir, code, tagset, {"train", "dev"}));
  }
  if (spec.regime == "mono") {
    for (std::uint64_t seed : config.seeds) {
      err << "# train " << spec.data.begin()->first << " seed " << seed << "\n";
      runs.push_back(train(config, corpora.front(), seed));
    }
  } else {
    PolyglotCorpus poly = concat_polyglot(corpora, config.uniform_sampling);
    for (std::uint64_t seed : config.seeds) {
      err << "# train polyglot seed " << seed << "\n";
      runs.push_back(train(config, poly, seed));
    }
  }
  return runs;
}

std::string history_json(const std::vector<TrainResult>& runs, const TrainResult& best) {
  ordered_json j;
  j["best_seed"] = best.checkpoint.seed;
  j["best_score"] = best.history.best_score();
  j["runs"] = ordered_json::array();
  for (const TrainResult& run : runs) {
    ordered_json r;
    r["seed"] = run.checkpoint.seed;
    r["best_score"] = run.history.best_score();
    r["epochs"] = ordered_json::array();
    for (const EpochRecord& epoch : run.history.epochs) {
      ordered_json e;
      e["epoch"] = epoch.epoch;
      e["selection"] = epoch.selection;
      e["dev_f1"] = epoch.dev_f1;
      r["epochs"].push_back(e);
    }
    j["runs"].push_back(r);
  }
  return j.dump(2) + "\n";
}

void write_train_outputs(OutputDir& dir, const std::string& command,
                         const ExperimentSpec& spec, const std::vector<TrainResult>& runs) {
  const TrainResult& best = select_best(runs);
  dir.write("checkpoint.pnlc", serialize_checkpoint(best.checkpoint));
  dir.write("history.json", history_json(runs, best));
  dir.seal(command, experiment_hash(spec), spec.train.seeds);
}

ExperimentSpec resolve_spec(const std::string& config_path, const std::string& regime,
                            std::uint64_t seed, bool seed_set, const std::string& out_flag) {
  ExperimentSpec spec = experiment_from_json(read_file(config_path));
  if (!regime.empty()) spec.regime = regime;
  if (seed_set) spec.train.seeds = {seed};
  if (!out_flag.empty()) spec.out = out_flag;
  validate_experiment(spec);
  return spec;
}

// ---- fisher file format ----

FisherDiagonal load_fisher(const std::string& path) { return fisher_from_json(read_file(path)); }

// ---- bts documents ----

struct BtsDoc {
  std::string text;
  std::size_t window_size = 60;
  std::size_t stride = 0;
  std::vector<ByteSpan> spans;       // encode input
  std::vector<std::string> targets;  // decode input
};

BtsDoc bts_doc_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad_config(std::string("bad bts JSON: ") + e.what());
  }
  if (!j.is_object()) bad_config("bts document must be a JSON object");
  BtsDoc doc;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "text") doc.text = value.get<std::string>();
      else if (key == "window_size") doc.window_size = value.get<std::size_t>();
      else if (key == "stride") doc.stride = value.get<std::size_t>();
      else if (key == "spans") {
        for (const auto& s : value) {
          for (const auto& [k, v] : s.items()) {
            if (k != "start" && k != "length" && k != "type") {
              bad_config("unknown span key '" + k + "'");
            }
          }
          doc.spans.push_back(ByteSpan{s.at("start").get<std::size_t>(),
                                       s.at("length").get<std::size_t>(),
                                       s.at("type").get<std::string>()});
        }
      }
      else if (key == "targets") doc.targets = value.get<std::vector<std::string>>();
      else bad_config("unknown bts key '" + key + "'");
    }
  } catch (const json::exception& e) {
    bad_config(std::string("bad bts value: ") + e.what());
  }
  return doc;
}

std::vector<std::string> encode_doc(const BtsDoc& doc) {
  std::vector<ByteSpan> spans = doc.spans;
  std::sort(spans.begin(), spans.end(), [](const ByteSpan& a, const ByteSpan& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.length != b.length) return a.length < b.length;
    return a.etype < b.etype;
  });
  std::vector<std::string> lines;
  for (const ByteWindow& window : window_stream(doc.text, doc.window_size, doc.stride)) {
    lines.push_back(format_target_line(window.global_offset, encode_spans(window, spans)));
  }
  return lines;
}

std::vector<ByteSpan> decode_doc(const BtsDoc& doc) {
  std::map<std::size_t, ByteWindow> by_offset;
  for (const ByteWindow& window : window_stream(doc.text, doc.window_size, doc.stride)) {
    by_offset.emplace(window.global_offset, window);
  }
  std::vector<std::vector<ByteSpan>> per_window;
  for (const std::string& line : doc.targets) {
    auto [offset, symbols] = parse_target_line(line);
    auto it = by_offset.find(offset);
    if (it == by_offset.end()) continue;  // total decode: unknown offsets are dropped
    per_window.push_back(decode_targets(symbols, it->second));
  }
  return merge_window_spans(per_window);
}

std::string spans_json(const std::vector<ByteSpan>& spans) {
  ordered_json j;
  j["spans"] = ordered_json::array();
  for (const ByteSpan& span : spans) {
    ordered_json s;
    s["start"] = span.start;
    s["length"] = span.length;
    s["type"] = span.etype;
    j["spans"].push_back(s);
  }
  return j.dump(2) + "\n";
}

std::string bts_file_json(const BtsDoc& doc, const std::vector<std::string>& lines) {
  ordered_json j;
  j["text"] = doc.text;
  j["window_size"] = doc.window_size;
  j["stride"] = doc.stride;
  j["targets"] = lines;
  return j.dump(2) + "\n";
}

// ---- individual commands ----

void cmd_gen_synth(const std::string& config_path, const std::string& out_dir,
                   std::uint64_t seed, bool seed_set) {
  SynthConfig config = synth_config_from_json(read_file(config_path));
  if (seed_set) config.master_seed = seed;
  GeneratedSuite suite = generate(config);

  OutputDir dir(out_dir);
  for (const auto& [code, corpus] : suite.corpora) {
    for (const std::string& split : split_names()) {
      dir.write(code + "/" + split + ".conll",
                write_conll(corpus.split(split), suite.tagset));
    }
  }
  dir.write("entities.json", manifest_json(suite));
  dir.seal("gen-synth", fnv1a64(synth_config_json(config)), {config.master_seed});
}

void cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
              const std::string& split, const std::string& lang_flag,
              const std::string& out_dir, std::ostream& out) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  std::string code = language_from_dir(data_dir, lang_flag);
  LabeledCorpus corpus = load_corpus_dir(data_dir, code, ckpt.tagset, {split});
  EvalReport report = evaluate(ckpt, corpus, split);
  if (out_dir.empty()) {
    out << report_json(report);
    return;
  }
  OutputDir dir(out_dir);
  dir.write("report.json", report_json(report));
  dir.write("report.tsv", report_tsv(report));
  ordered_json canonical{{"ckpt", ckpt_path}, {"data", data_dir}, {"split", split},
                         {"lang", code}};
  dir.seal("eval", fnv1a64(canonical.dump()), {ckpt.seed});
}

void cmd_prune_sweep(const std::string& ckpt_path, const std::vector<std::string>& data_dirs,
                     const std::string& split, const std::vector<double>& fractions,
                     double delta, const std::string& out_dir) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  std::vector<LabeledCorpus> corpora;
  for (const std::string& dir : data_dirs) {
    corpora.push_back(load_corpus_dir(dir, language_from_dir(dir, ""), ckpt.tagset, {split}));
  }
  PruneCurve curve = prune_sweep(ckpt, corpora, split, fractions);

  ordered_json thresholds;
  thresholds["delta"] = delta;
  thresholds["thresholds"] = ordered_json::object();
  for (const std::string& language : curve.languages()) {
    thresholds["thresholds"][language] = overprune_threshold(curve, language, delta);
  }

  OutputDir dir(out_dir);
  dir.write("curve.csv", prune_curve_csv(curve));
  dir.write("curve.json", prune_curve_json(curve));
  dir.write("curve.gnuplot", prune_curve_gnuplot(curve));
  dir.write("overprune.json", thresholds.dump(2) + "\n");
  ordered_json canonical{{"ckpt", ckpt_path}, {"data", data_dirs}, {"split", split},
                         {"fractions", fractions}, {"delta", delta}};
  dir.seal("prune-sweep", fnv1a64(canonical.dump()), {ckpt.seed});
}

void cmd_fisher(const std::string& ckpt_path, const std::string& data_dir,
                const std::string& lang_flag, std::size_t samples, std::uint64_t seed,
                const std::string& out_dir) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  std::string code = language_from_dir(data_dir, lang_flag);
  LabeledCorpus corpus = load_corpus_dir(data_dir, code, ckpt.tagset, {"train"});
  FisherDiagonal fisher = fisher_diagonal(ckpt, corpus, samples, seed);

  OutputDir dir(out_dir);
  dir.write("fisher.json", fisher_json(fisher));
  ordered_json canonical{{"ckpt", ckpt_path}, {"data", data_dir}, {"lang", code},
                         {"samples", samples}, {"seed", seed}};
  dir.seal("fisher", fnv1a64(canonical.dump()), {seed});
}

void cmd_fisher_overlap(const std::string& a_path, const std::vector<std::string>& b_paths,
                        const std::vector<int>& ks, const std::string& out_dir,
                        std::ostream& out) {
  FisherDiagonal fa = load_fisher(a_path);
  std::vector<FisherDiagonal> parts;
  for (const std::string& path : b_paths) parts.push_back(load_fisher(path));
  FisherDiagonal fb;
  if (parts.size() == 1) {
    fb = std::move(parts.front());
  } else {
    std::vector<const FisherDiagonal*> pointers;
    for (const FisherDiagonal& part : parts) pointers.push_back(&part);
    fb = mean_fisher(pointers);
  }
  OverlapReport report = topk_overlap(fa, fb, ks);
  if (out_dir.empty()) {
    out << overlap_json(report);
    return;
  }
  OutputDir dir(out_dir);
  dir.write("overlap.csv", overlap_csv(report));
  dir.write("overlap.json", overlap_json(report));
  ordered_json canonical{{"a", a_path}, {"b", b_paths}, {"ks", ks}};
  dir.seal("fisher-overlap", fnv1a64(canonical.dump()), {});
}

std::vector<std::vector<int>> predict_split(Tagger& tagger, const std::vector<Sentence>& gold) {
  std::vector<std::vector<int>> predicted;
  for (const Sentence& s : gold) predicted.push_back(tagger.predict_labels(s));
  return predicted;
}

void cmd_errors(const std::string& ckpt_path, const std::string& reference_path,
                const std::string& data_dir, const std::string& split,
                const std::string& lang_flag, const std::string& out_dir, std::ostream& out) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  std::string code = language_from_dir(data_dir, lang_flag);
  LabeledCorpus corpus = load_corpus_dir(data_dir, code, ckpt.tagset, {split});
  const std::vector<Sentence>& gold = corpus.split(split);

  auto tagger = tagger_from(ckpt);
  std::vector<std::vector<int>> predicted = predict_split(*tagger, gold);
  std::vector<std::vector<int>> reference;
  const std::vector<std::vector<int>>* reference_ptr = nullptr;
  if (!reference_path.empty()) {
    Checkpoint other = load_checkpoint(reference_path);
    auto other_tagger = tagger_from(other);
    reference = predict_split(*other_tagger, gold);
    reference_ptr = &reference;
  }
  ErrorReport report = error_counts(gold, predicted, reference_ptr, ckpt.tagset);
  if (out_dir.empty()) {
    out << error_report_json(report);
    return;
  }
  OutputDir dir(out_dir);
  dir.write("errors.csv", error_report_csv(report));
  dir.write("errors.json", error_report_json(report));
  ordered_json canonical{{"ckpt", ckpt_path}, {"reference", reference_path},
                         {"data", data_dir}, {"split", split}, {"lang", code}};
  dir.seal("errors", fnv1a64(canonical.dump()), {ckpt.seed});
}

void cmd_common_entities(const std::string& ckpt_path, const std::string& data_dir,
                         const std::string& split, const std::string& lang_flag,
                         const std::vector<std::string>& other_dirs,
                         const std::string& out_dir, std::ostream& out) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  std::string code = language_from_dir(data_dir, lang_flag);
  LabeledCorpus corpus = load_corpus_dir(data_dir, code, ckpt.tagset, {split});
  const std::vector<Sentence>& gold = corpus.split(split);

  auto tagger = tagger_from(ckpt);
  std::vector<std::vector<EntitySpan>> predicted;
  for (const Sentence& s : gold) predicted.push_back(tagger->predict(s));
  SpanErrors errors = span_errors(gold, predicted, ckpt.tagset);

  std::vector<SurfaceEntity> other_train;
  for (const std::string& dir : other_dirs) {
    LabeledCorpus other =
        load_corpus_dir(dir, language_from_dir(dir, ""), ckpt.tagset, {"train"});
    std::vector<SurfaceEntity> entities = collect_entities(other.split("train"), ckpt.tagset);
    other_train.insert(other_train.end(), entities.begin(), entities.end());
  }
  CommonEntityReport report = common_entity_rate(errors, other_train);
  if (out_dir.empty()) {
    out << common_entity_json(report);
    return;
  }
  OutputDir dir(out_dir);
  dir.write("common.csv", common_entity_csv(report));
  dir.write("common.json", common_entity_json(report));
  ordered_json canonical{{"ckpt", ckpt_path}, {"data", data_dir}, {"split", split},
                         {"lang", code}, {"other", other_dirs}};
  dir.seal("common-entities", fnv1a64(canonical.dump()), {ckpt.seed});
}

void cmd_bts_encode(const std::string& in_path, const std::string& out_dir, std::ostream& out) {
  BtsDoc doc = bts_doc_from_json(read_file(in_path));
  std::vector<std::string> lines = encode_doc(doc);
  if (out_dir.empty()) {
    for (const std::string& line : lines) out << line << "\n";
    return;
  }
  OutputDir dir(out_dir);
  dir.write("bts.json", bts_file_json(doc, lines));
  ordered_json canonical{{"in", in_path}};
  dir.seal("bts-encode", fnv1a64(canonical.dump()), {});
}

void cmd_bts_decode(const std::string& in_path, const std::string& out_dir, std::ostream& out) {
  BtsDoc doc = bts_doc_from_json(read_file(in_path));
  std::string decoded = spans_json(decode_doc(doc));
  if (out_dir.empty()) {
    out << decoded;
    return;
  }
  OutputDir dir(out_dir);
  dir.write("spans.json", decoded);
  ordered_json canonical{{"in", in_path}};
  dir.seal("bts-decode", fnv1a64(canonical.dump()), {});
}

// ---- repro: the full desk-scale pipeline ----

struct ReproParams {
  std::size_t seeds = 5;
  bool quick = false;

  std::size_t max_epochs() const { return quick ? 15 : 40; }
  std::size_t patience() const { return quick ? 8 : 12; }
  std::size_t finetune_epochs() const { return quick ? 8 : 15; }
  std::size_t fisher_samples() const { return quick ? 20 : 50; }
};

SynthConfig repro_synth_config() {
  SynthConfig config;
  config.num_languages = 3;
  config.scripts = {{U'a', U'z'}, {U'а', U'я'}, {U'α', U'ω'}};
  config.entity_script = {U'A', U'Z'};
  config.shared_inventory = 12;
  config.inclusion_prob = 0.5;
  config.entity_types = {"PER", "LOC"};
  config.train_sentences = 60;
  config.dev_sentences = 20;
  config.test_sentences = 20;
  config.entity_density = 0.3;
  config.master_seed = 7;
  return config;
}

TrainConfig repro_train_config(const ReproParams& params) {
  TrainConfig config;
  config.model = variant_config("hiercrf-byte");
  config.model.hiercrf.subtoken_layers = 1;
  config.model.hiercrf.subtoken_hidden = 8;
  config.model.hiercrf.sentence_layers = 1;
  config.model.hiercrf.sentence_hidden = 8;
  config.model.hiercrf.embedding_dim = 8;
  config.adam.lr = 0.01;
  config.max_epochs = params.max_epochs();
  config.patience = params.patience();
  config.seeds.clear();
  for (std::size_t s = 1; s <= params.seeds; ++s) config.seeds.push_back(s);
  return config;
}

void cmd_repro(const std::string& out_dir, const ReproParams& params, std::ostream& out,
               std::ostream& err) {
  OutputDir dir(out_dir);
  SynthConfig synth = repro_synth_config();
  TrainConfig base_config = repro_train_config(params);

  err << "# generating data\n";
  GeneratedSuite suite = generate(synth);
  std::vector<std::string> codes;
  for (const auto& [code, corpus] : suite.corpora) {
    codes.push_back(code);
    for (const std::string& split : split_names()) {
      dir.write("data/" + code + "/" + split + ".conll",
                write_conll(corpus.split(split), suite.tagset));
    }
  }
  dir.write("data/entities.json", manifest_json(suite));

  std::map<std::string, std::vector<double>> mono_f1, finetuned_f1;
  std::map<std::string, const LabeledCorpus*> corpora;
  for (const std::string& code : codes) corpora[code] = &suite.corpora.at(code);

  std::map<std::string, Checkpoint> mono_best;
  for (const std::string& code : codes) {
    std::vector<TrainResult> runs;
    for (std::uint64_t seed : base_config.seeds) {
      err << "# mono " << code << " seed " << seed << "\n";
      runs.push_back(train(base_config, *corpora.at(code), seed));
      mono_f1[code].push_back(runs.back().history.best_score());
    }
    const TrainResult& best = select_best(runs);
    mono_best[code] = best.checkpoint;
    dir.write("mono/" + code + "/checkpoint.pnlc", serialize_checkpoint(best.checkpoint));
    dir.write("mono/" + code + "/history.json", history_json(runs, best));
  }

  std::vector<LabeledCorpus> all;
  for (const std::string& code : codes) all.push_back(*corpora.at(code));
  PolyglotCorpus poly = concat_polyglot(all, false);
  std::vector<TrainResult> poly_runs;
  for (std::uint64_t seed : base_config.seeds) {
    err << "# polyglot seed " << seed << "\n";
    poly_runs.push_back(train(base_config, poly, seed));
  }
  const TrainResult& poly_best = select_best(poly_runs);
  dir.write("poly/checkpoint.pnlc", serialize_checkpoint(poly_best.checkpoint));
  dir.write("poly/history.json", history_json(poly_runs, poly_best));

  TrainConfig ft_config = base_config;
  ft_config.max_epochs = params.finetune_epochs();
  ft_config.patience = params.finetune_epochs();
  ft_config.finetune_lr = 0.005;
  for (const std::string& code : codes) {
    std::vector<TrainResult> runs;
    for (std::size_t i = 0; i < poly_runs.size(); ++i) {
      std::uint64_t seed = base_config.seeds[i];
      err << "# finetune " << code << " seed " << seed << "\n";
      runs.push_back(finetune(poly_runs[i].checkpoint, *corpora.at(code), ft_config, seed));
      finetuned_f1[code].push_back(runs.back().history.best_score());
    }
    const TrainResult& best = select_best(runs);
    dir.write("finetune/" + code + "/checkpoint.pnlc", serialize_checkpoint(best.checkpoint));
    dir.write("finetune/" + code + "/history.json", history_json(runs, best));
  }

  err << "# pruning sweep\n";
  PruneCurve curve =
      prune_sweep(poly_best.checkpoint, all, "dev", {0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9});
  dir.write("analysis/curve.csv", prune_curve_csv(curve));
  dir.write("analysis/curve.json", prune_curve_json(curve));
  ordered_json thresholds;
  thresholds["delta"] = 1.0;
  thresholds["thresholds"] = ordered_json::object();
  for (const std::string& language : curve.languages()) {
    thresholds["thresholds"][language] = overprune_threshold(curve, language, 1.0);
  }
  dir.write("analysis/overprune.json", thresholds.dump(2) + "\n");

  err << "# fisher diagonals\n";
  std::map<std::string, FisherDiagonal> fishers;
  for (const std::string& code : codes) {
    fishers[code] = fisher_diagonal(mono_best.at(code), *corpora.at(code),
                                    params.fisher_samples(), 1);
    dir.write("analysis/fisher_" + code + ".json", fisher_json(fishers.at(code)));
  }
  std::vector<const FisherDiagonal*> rest;
  for (std::size_t i = 1; i < codes.size(); ++i) rest.push_back(&fishers.at(codes[i]));
  FisherDiagonal pooled = mean_fisher(rest);
  OverlapReport overlap = topk_overlap(fishers.at(codes.front()), pooled);
  dir.write("analysis/overlap.csv", overlap_csv(overlap));
  dir.write("analysis/overlap.json", overlap_json(overlap));

  err << "# error analyses\n";
  const std::string& first = codes.front();
  const std::vector<Sentence>& gold = corpora.at(first)->split("dev");
  auto poly_tagger = tagger_from(poly_best.checkpoint);
  auto mono_tagger = tagger_from(mono_best.at(first));
  std::vector<std::vector<int>> poly_pred = predict_split(*poly_tagger, gold);
  std::vector<std::vector<int>> mono_pred = predict_split(*mono_tagger, gold);
  ErrorReport errors = error_counts(gold, poly_pred, &mono_pred, suite.tagset);
  dir.write("analysis/errors.csv", error_report_csv(errors));
  dir.write("analysis/errors.json", error_report_json(errors));

  std::vector<std::vector<EntitySpan>> mono_spans;
  for (const Sentence& s : gold) mono_spans.push_back(mono_tagger->predict(s));
  SpanErrors span_errs = span_errors(gold, mono_spans, suite.tagset);
  std::vector<SurfaceEntity> other_train;
  for (std::size_t i = 1; i < codes.size(); ++i) {
    std::vector<SurfaceEntity> entities =
        collect_entities(corpora.at(codes[i])->split("train"), suite.tagset);
    other_train.insert(other_train.end(), entities.begin(), entities.end());
  }
  CommonEntityReport common = common_entity_rate(span_errs, other_train);
  dir.write("analysis/common.csv", common_entity_csv(common));
  dir.write("analysis/common.json", common_entity_json(common));

  ordered_json summary;
  summary["languages"] = codes;
  summary["seeds"] = base_config.seeds;
  summary["mono_f1"] = mono_f1;
  summary["finetuned_f1"] = finetuned_f1;
  bool direction_ok = true;
  bool degradation_ok = true;
  summary["median_mono"] = ordered_json::object();
  summary["median_finetuned"] = ordered_json::object();
  for (const std::string& code : codes) {
    double mono_median = median(mono_f1.at(code));
    double ft_median = median(finetuned_f1.at(code));
    summary["median_mono"][code] = mono_median;
    summary["median_finetuned"][code] = ft_median;
    if (ft_median < mono_median) direction_ok = false;
    if (mono_median - ft_median > 0.01) degradation_ok = false;
  }
  summary["direction_ok"] = direction_ok;
  summary["degradation_ok"] = degradation_ok;
  dir.write("summary.json", summary.dump(2) + "\n");

  ordered_json canonical;
  canonical["synth"] = json::parse(synth_config_json(synth));
  canonical["train"] = train_json(base_config);
  canonical["finetune"] = train_json(ft_config);
  canonical["quick"] = params.quick;
  dir.seal("repro", fnv1a64(canonical.dump()), base_config.seeds);

  out << "repro summary: direction_ok=" << (direction_ok ? "true" : "false")
      << " degradation_ok=" << (degradation_ok ? "true" : "false") << "\n";
}

}  // namespace

// ---- public pieces ----

ExperimentSpec experiment_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad_config(std::string("bad experiment JSON: ") + e.what());
  }
  if (!j.is_object()) bad_config("experiment config must be a JSON object");

  ExperimentSpec spec;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "regime") spec.regime = value.get<std::string>();
      else if (key == "data") spec.data = value.get<std::map<std::string, std::string>>();
      else if (key == "entity_types") spec.entity_types = value.get<std::vector<std::string>>();
      else if (key == "arch") {
        if (!value.is_null()) spec.arch = arch_from_json(value);
      }
      else if (key == "train") train_from_json(value, spec.train);
      else if (key == "base_checkpoint") spec.base_checkpoint = value.get<std::string>();
      else if (key == "target_language") spec.target_language = value.get<std::string>();
      else if (key == "out") spec.out = value.get<std::string>();
      else bad_config("unknown experiment key '" + key + "'");
    }
  } catch (const json::exception& e) {
    bad_config(std::string("bad experiment value: ") + e.what());
  }
  return spec;
}

std::string experiment_json(const ExperimentSpec& spec) {
  return experiment_canonical(spec, true).dump(2) + "\n";
}

void validate_experiment(const ExperimentSpec& spec) {
  if (spec.regime != "mono" && spec.regime != "polyglot" && spec.regime != "finetune") {
    bad_config("regime must be mono, polyglot, or finetune");
  }
  if (spec.data.empty()) bad_config("data must name at least one language directory");
  if (spec.entity_types.empty()) bad_config("entity_types must be non-empty");
  if (spec.regime == "finetune") {
    if (spec.arch.has_value()) {
      bad_config("finetune takes its architecture from the base checkpoint; drop 'arch'");
    }
    if (spec.base_checkpoint.empty()) bad_config("finetune needs base_checkpoint");
    if (spec.target_language.empty()) bad_config("finetune needs target_language");
    if (spec.data.count(spec.target_language) == 0) {
      bad_config("target_language '" + spec.target_language + "' missing from data");
    }
  } else {
    if (!spec.arch.has_value()) bad_config(spec.regime + " training needs an arch");
    if (spec.regime == "mono" && spec.data.size() != 1) {
      bad_config("mono regime takes exactly one data language");
    }
  }
}

LabeledCorpus load_corpus_dir(const std::string& dir, const std::string& language,
                              const TagSet& tagset,
                              const std::vector<std::string>& required_splits) {
  LanguageId lang(language);
  LabeledCorpus corpus(lang, tagset);
  for (const std::string& split : split_names()) {
    fs::path path = fs::path(dir) / (split + ".conll");
    bool required = std::find(required_splits.begin(), required_splits.end(), split) !=
                    required_splits.end();
    if (!fs::exists(path)) {
      if (required) throw Error(ErrorKind::IoError, "missing " + path.string());
      continue;
    }
    corpus.set_split(split, parse_conll(read_file(path.string()), tagset, lang));
  }
  return corpus;
}

std::string fisher_json(const FisherDiagonal& fisher) {
  ordered_json j;
  j["language"] = fisher.language;
  j["n_examples"] = fisher.n_examples;
  j["samples_per_example"] = fisher.samples_per_example;
  j["pooling"] = fisher.pooling;
  j["layers"] = ordered_json::object();
  for (std::size_t i = 0; i < fisher.values.size(); ++i) {
    const Tensor& tensor = fisher.values.at(i);
    ordered_json layer;
    layer["shape"] = tensor.shape();
    layer["values"] = std::vector<double>(tensor.flat().begin(), tensor.flat().end());
    j["layers"][fisher.values.names()[i]] = layer;
  }
  return j.dump() + "\n";
}

FisherDiagonal fisher_from_json(const std::string& text) {
  // Layer order is part of the layout contract, so parsing keeps document order.
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const json::exception& e) {
    bad_config(std::string("bad fisher JSON: ") + e.what());
  }
  if (!j.is_object()) bad_config("fisher document must be a JSON object");
  FisherDiagonal fisher;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "language") fisher.language = value.get<std::string>();
      else if (key == "n_examples") fisher.n_examples = value.get<std::size_t>();
      else if (key == "samples_per_example") {
        fisher.samples_per_example = value.get<std::size_t>();
      }
      else if (key == "pooling") fisher.pooling = value.get<std::string>();
      else if (key == "layers") {
        if (!value.is_object()) bad_config("fisher layers must be an object");
        for (const auto& [name, layer] : value.items()) {
          std::vector<std::size_t> shape = layer.at("shape").get<std::vector<std::size_t>>();
          std::vector<double> values = layer.at("values").get<std::vector<double>>();
          fisher.values.add(name, Tensor::from_values(shape, values));
        }
      }
      else bad_config("unknown fisher key '" + key + "'");
    }
  } catch (const json::exception& e) {
    bad_config(std::string("bad fisher value: ") + e.what());
  }
  return fisher;
}

void write_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target.parent_path() / (".tmp-" + target.filename().string());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out.good()) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilingual NER laboratory: synthetic corpora, CRF taggers, "
               "pruning and Fisher analyses"};
  app.name(kToolName);
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // gen-synth
  std::string gs_config, gs_out;
  std::uint64_t gs_seed = 0;
  auto* gen_synth = app.add_subcommand("gen-synth", "Generate a synthetic multilingual corpus");
  gen_synth->add_option("--config", gs_config, "Corpus config JSON")->required();
  gen_synth->add_option("--out", gs_out, "Output directory")->required();
  auto* gs_seed_opt = gen_synth->add_option("--seed", gs_seed, "Override the master seed");

  // train / train-polyglot / finetune
  std::string tr_config, tr_out;
  std::uint64_t tr_seed = 0;
  auto add_train_command = [&](const char* name, const char* help, const char* regime) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("--config", tr_config, "Experiment config JSON")->required();
    CLI::Option* seed_opt = sc->add_option("--seed", tr_seed, "Run only this seed");
    sc->add_option("--out", tr_out, "Output directory (overrides config 'out')");
    std::string command = name;
    sc->callback([&, seed_opt, regime, command] {
      ExperimentSpec spec =
          resolve_spec(tr_config, regime, tr_seed, seed_opt->count() > 0, tr_out);
      std::vector<TrainResult> runs = run_regime(spec, err);
      OutputDir dir(spec.out);
      write_train_outputs(dir, command, spec, runs);
    });
    return sc;
  };
  add_train_command("train", "Train one monolingual model (best of the seed sweep)", "mono");
  add_train_command("train-polyglot", "Train one model jointly over all data languages",
                    "polyglot");
  add_train_command("finetune", "Continue a checkpoint on one target language", "finetune");

  // eval
  std::string ev_ckpt, ev_data, ev_split = "dev", ev_lang, ev_out;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on one split");
  eval_cmd->add_option("--ckpt", ev_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--data", ev_data, "Data directory (train/dev/test.conll)")->required();
  eval_cmd->add_option("--split", ev_split, "Split name (default dev)");
  eval_cmd->add_option("--lang", ev_lang, "Language code (default: data directory name)");
  eval_cmd->add_option("--out", ev_out, "Output directory (default: print the report)");

  // prune-sweep
  std::string ps_ckpt, ps_split = "dev", ps_out;
  std::vector<std::string> ps_data;
  std::vector<double> ps_fractions = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double ps_delta = 1.0;
  auto* prune_cmd = app.add_subcommand("prune-sweep",
                                       "F1 vs pruned fraction, plus overprune thresholds");
  prune_cmd->add_option("--ckpt", ps_ckpt, "Checkpoint file")->required();
  prune_cmd->add_option("--data", ps_data, "Data directories, one per language")->required();
  prune_cmd->add_option("--split", ps_split, "Split name (default dev)");
  prune_cmd->add_option("--fractions", ps_fractions,
                        "Ascending pruned fractions starting at 0")->delimiter(',');
  prune_cmd->add_option("--delta", ps_delta, "Allowed F1 drop in points (default 1.0)");
  prune_cmd->add_option("--out", ps_out, "Output directory")->required();

  // fisher
  std::string fi_ckpt, fi_data, fi_lang, fi_out;
  std::size_t fi_samples = 100;
  std::uint64_t fi_seed = 1;
  auto* fisher_cmd = app.add_subcommand("fisher",
                                        "Empirical Fisher diagonal over a train split");
  fisher_cmd->add_option("--ckpt", fi_ckpt, "Checkpoint file")->required();
  fisher_cmd->add_option("--data", fi_data, "Data directory")->required();
  fisher_cmd->add_option("--lang", fi_lang, "Language code (default: data directory name)");
  fisher_cmd->add_option("--samples", fi_samples, "Posterior samples per example (default 100)");
  fisher_cmd->add_option("--seed", fi_seed, "Sampling seed (default 1)");
  fisher_cmd->add_option("--out", fi_out, "Output directory")->required();

  // fisher-overlap
  std::string fo_a, fo_out;
  std::vector<std::string> fo_b;
  std::vector<int> fo_ks = {5, 25, 50};
  auto* overlap_cmd = app.add_subcommand("fisher-overlap",
                                         "Top-k% overlap between Fisher diagonals");
  overlap_cmd->add_option("--a", fo_a, "First fisher.json")->required();
  overlap_cmd->add_option("--b", fo_b, "Second fisher.json (repeat to pool a mean)")
      ->required();
  overlap_cmd->add_option("--ks", fo_ks, "Percentages (default 5,25,50)")->delimiter(',');
  overlap_cmd->add_option("--out", fo_out, "Output directory (default: print the report)");

  // errors
  std::string er_ckpt, er_reference, er_data, er_split = "dev", er_lang, er_out;
  auto* errors_cmd = app.add_subcommand("errors", "Token error counts by gold class");
  errors_cmd->add_option("--ckpt", er_ckpt, "Checkpoint file")->required();
  errors_cmd->add_option("--reference", er_reference,
                         "Checkpoint to diff against (adds per-class deltas)");
  errors_cmd->add_option("--data", er_data, "Data directory")->required();
  errors_cmd->add_option("--split", er_split, "Split name (default dev)");
  errors_cmd->add_option("--lang", er_lang, "Language code (default: data directory name)");
  errors_cmd->add_option("--out", er_out, "Output directory (default: print the report)");

  // common-entities
  std::string ce_ckpt, ce_data, ce_split = "dev", ce_lang, ce_out;
  std::vector<std::string> ce_other;
  auto* common_cmd = app.add_subcommand(
      "common-entities", "How many span errors share surface forms with other languages");
  common_cmd->add_option("--ckpt", ce_ckpt, "Checkpoint file")->required();
  common_cmd->add_option("--data", ce_data, "Evaluated language's data directory")->required();
  common_cmd->add_option("--split", ce_split, "Split name (default dev)");
  common_cmd->add_option("--lang", ce_lang, "Language code (default: data directory name)");
  common_cmd->add_option("--other", ce_other, "Other languages' data directories")->required();
  common_cmd->add_option("--out", ce_out, "Output directory (default: print the report)");

  // bts-encode / bts-decode
  std::string be_in, be_out, bd_in, bd_out;
  auto* encode_cmd = app.add_subcommand("bts-encode",
                                        "Byte spans to per-window target symbol lines");
  encode_cmd->add_option("--in", be_in, "Document JSON (text, spans, window_size, stride)")
      ->required();
  encode_cmd->add_option("--out", be_out, "Output directory (default: print the lines)");
  auto* decode_cmd = app.add_subcommand("bts-decode",
                                        "Target symbol lines back to byte spans");
  decode_cmd->add_option("--in", bd_in, "Document JSON (text, targets, window_size, stride)")
      ->required();
  decode_cmd->add_option("--out", bd_out, "Output directory (default: print the spans)");

  // repro
  std::string rp_out;
  ReproParams rp_params;
  auto* repro_cmd = app.add_subcommand(
      "repro", "Full desk-scale pipeline: data, mono vs polyglot+finetune, analyses");
  repro_cmd->add_option("--out", rp_out, "Output directory")->required();
  repro_cmd->add_option("--seeds", rp_params.seeds, "Seed count (default 5)");
  repro_cmd->add_flag("--quick", rp_params.quick, "Smaller epoch budget for smoke tests");

  gen_synth->callback([&] { cmd_gen_synth(gs_config, gs_out, gs_seed, gs_seed_opt->count() > 0); });
  eval_cmd->callback([&] { cmd_eval(ev_ckpt, ev_data, ev_split, ev_lang, ev_out, out); });
  prune_cmd->callback(
      [&] { cmd_prune_sweep(ps_ckpt, ps_data, ps_split, ps_fractions, ps_delta, ps_out); });
  fisher_cmd->callback(
      [&] { cmd_fisher(fi_ckpt, fi_data, fi_lang, fi_samples, fi_seed, fi_out); });
  overlap_cmd->callback([&] { cmd_fisher_overlap(fo_a, fo_b, fo_ks, fo_out, out); });
  errors_cmd->callback(
      [&] { cmd_errors(er_ckpt, er_reference, er_data, er_split, er_lang, er_out, out); });
  common_cmd->callback(
      [&] { cmd_common_entities(ce_ckpt, ce_data, ce_split, ce_lang, ce_other, ce_out, out); });
  encode_cmd->callback([&] { cmd_bts_encode(be_in, be_out, out); });
  decode_cmd->callback([&] { cmd_bts_decode(bd_in, bd_out, out); });
  repro_cmd->callback([&] { cmd_repro(rp_out, rp_params, out, err); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    bool usage = e.kind() == ErrorKind::InvalidConfig || e.kind() == ErrorKind::InvalidArgument;
    return usage ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace polyner::cli
