#include "cli.hpp"

#include <CLI11.hpp>
#include <signal.h>

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "config.hpp"
#include "semtag/baselines/baselines.hpp"
#include "semtag/corpus/sampling.hpp"
#include "semtag/corpus/split.hpp"
#include "semtag/diagnostics/diagnostics.hpp"
#include "semtag/error.hpp"
#include "semtag/review/review.hpp"
#include "semtag/training/checkpoint.hpp"
#include "semtag/training/multiseed.hpp"
#include "semtag/training/train.hpp"

#ifndef SEMTAG_VERSION
#define SEMTAG_VERSION "dev"
#endif

namespace semtag::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  Context(std::ostream& o, std::ostream& e, std::vector<std::string> args)
      : out(o), err(e), argv(std::move(args)) {}

  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> argv;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  std::string started_at = review::utc_now();
  bool quiet = false;
  std::mutex log_mu;

  void log(const std::string& line) {
    if (quiet) return;
    std::lock_guard lock(log_mu);
    err << line << '\n' << std::flush;
  }
};

struct Manifest {
  std::string command;
  json config = json::object();
  std::vector<std::uint64_t> seeds;
  std::map<std::string, fs::path> inputs, outputs;
};

void write_manifest(Context& ctx, const fs::path& where, const Manifest& m) {
  json in = json::object(), out = json::object();
  for (const auto& [k, v] : m.inputs) in[k] = fs::absolute(v).string();
  for (const auto& [k, v] : m.outputs) out[k] = fs::absolute(v).string();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.started).count();
  training::save_json(where, {{"command", m.command},
                              {"argv", ctx.argv},
                              {"config", m.config},
                              {"seeds", m.seeds},
                              {"inputs", in},
                              {"outputs", out},
                              {"tool_version", SEMTAG_VERSION},
                              {"started_at", ctx.started_at},
                              {"wall_clock_seconds", secs}});
}

fs::path manifest_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::ofstream open_out(const fs::path& p) {
  ensure_parent(p);
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::vector<training::PredictionRecord> load_predictions(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open predictions " + p.string());
  return training::read_predictions(in);
}

training::ModelResources resources_from(const ResourcePaths& r) {
  training::ModelResources res;
  res.token_vectors = r.token_vectors;
  res.lemma_vectors = r.lemma_vectors;
  if (r.external_vectors) res.external = features::load_external_vector_file(*r.external_vectors);
  return res;
}

training::ModelResources external_only(const std::optional<fs::path>& external) {
  training::ModelResources res;
  if (external) res.external = features::load_external_vector_file(*external);
  return res;
}

corpus::SplitRecords load_data(const DataPaths& d) {
  if (d.corpus && d.split) {
    return corpus::materialize(corpus::load_split(*d.split), corpus::load_corpus(*d.corpus));
  }
  if (!d.train || !d.dev) throw ConfigError("config: data section is missing");
  corpus::SplitRecords s;
  s.train = corpus::load_corpus(*d.train);
  s.dev = corpus::load_corpus(*d.dev);
  if (d.test) s.test = corpus::load_corpus(*d.test);
  return s;
}

void add_data_inputs(Manifest& m, const ExperimentConfig& c) {
  auto put = [&](const char* k, const std::optional<fs::path>& p) {
    if (p) m.inputs[k] = *p;
  };
  put("corpus", c.data.corpus);
  put("split", c.data.split);
  put("train", c.data.train);
  put("dev", c.data.dev);
  put("test", c.data.test);
  put("token_vectors", c.resources.token_vectors);
  put("lemma_vectors", c.resources.lemma_vectors);
  put("external_vectors", c.resources.external_vectors);
}

// Trains one seed, writes dir/model.ckpt, and returns the run report with
// the test metrics (dev when no test set is configured).
training::RunReport train_one(Context& ctx, const ExperimentConfig& cfg, const corpus::SplitRecords& data,
                              const training::ModelResources& res, std::uint64_t seed, const fs::path& dir) {
  auto tc = cfg.training;
  tc.seed = seed;
  training::Classifier<float> model(cfg.model, training::ModelVocab::build(data.train, cfg.model), seed, res);
  const std::string tag = "[seed " + std::to_string(seed) + "] ";
  auto result = training::train(model, data.train, data.dev, tc, [&](const training::EpochRecord& e) {
    std::ostringstream line;
    line << tag << "epoch " << e.epoch << " train_loss " << e.train_loss << " dev_loss " << e.dev_loss
         << " dev_f1 " << e.dev.f1 << (e.improved ? " *" : "");
    ctx.log(line.str());
  });
  fs::create_directories(dir);
  training::save_checkpoint(dir / "model.ckpt", model, {{"training", training::to_json(tc)}});
  training::RunReport report;
  auto full = to_json(cfg);
  full["training"] = training::to_json(tc);
  report.config = full;
  report.seed = seed;
  report.history = result.history;
  report.best_epoch = result.best_epoch;
  const auto& eval_set = data.test.empty() ? data.dev : data.test;
  report.final = training::evaluate(model, eval_set).metrics;
  ctx.log(tag + "best epoch " + std::to_string(result.best_epoch) + ", " +
          (data.test.empty() ? "dev" : "test") + " F1 " + std::to_string(report.final.f1));
  return report;
}

struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<std::size_t> epochs, patience, batch;
  std::optional<std::string> monitor;

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "Override the config seed");
    app->add_option("--lr", lr, "Override training.learning_rate");
    app->add_option("--epochs", epochs, "Override training.max_epochs");
    app->add_option("--patience", patience, "Override training.patience");
    app->add_option("--batch-size", batch, "Override training.batch_size");
    app->add_option("--monitor", monitor, "Override training.monitor (dev-loss|dev-f1)");
  }
  void apply(ExperimentConfig& c) const {
    if (seed) c.training.seed = *seed;
    if (lr) c.training.learning_rate = *lr;
    if (epochs) c.training.max_epochs = *epochs;
    if (patience) c.training.patience = *patience;
    if (batch) c.training.batch_size = *batch;
    if (monitor) c.training.monitor = training::parse_monitor(*monitor);
    c.training.validate();
  }
};

// ---- commands

void cmd_split(Context& ctx, const fs::path& corpus_path, const std::string& name, std::uint64_t seed,
               double ratio, const fs::path& out, const std::optional<fs::path>& materialize) {
  const auto records = corpus::load_corpus(corpus_path);
  const auto split = corpus::build_splits(records, corpus::parse_split_name(name), seed, ratio);
  ensure_parent(out);
  corpus::save_split(out, split);
  Manifest m{"split", {{"name", name}, {"ratio", ratio}}, {seed}, {{"corpus", corpus_path}}, {{"split", out}}};
  if (materialize) {
    const auto s = corpus::materialize(split, records);
    fs::create_directories(*materialize);
    corpus::save_corpus(*materialize / "train.jsonl", s.train);
    corpus::save_corpus(*materialize / "dev.jsonl", s.dev);
    corpus::save_corpus(*materialize / "test.jsonl", s.test);
    m.outputs["train"] = *materialize / "train.jsonl";
    m.outputs["dev"] = *materialize / "dev.jsonl";
    m.outputs["test"] = *materialize / "test.jsonl";
  }
  write_manifest(ctx, manifest_for(out), m);
  ctx.log("split " + name + ": " + std::to_string(split.train.size()) + " train, " +
          std::to_string(split.dev.size()) + " dev, " + std::to_string(split.test.size()) + " test");
}

void cmd_sample(Context& ctx, const fs::path& works, const fs::path& positives, std::size_t k, std::uint64_t seed,
                const fs::path& out) {
  const auto sampled = corpus::sample_negatives(corpus::load_corpus(works), corpus::load_corpus(positives), k, seed);
  ensure_parent(out);
  corpus::save_corpus(out, sampled);
  write_manifest(ctx, manifest_for(out),
                 {"sample-negatives", {{"k", k}}, {seed}, {{"works", works}, {"positives", positives}}, {{"negatives", out}}});
  ctx.log("sampled " + std::to_string(sampled.size()) + " negatives");
}

void cmd_stats(Context& ctx, const fs::path& corpus_path, int bucket_years, const std::optional<fs::path>& out) {
  const auto rows = corpus::corpus_stats(corpus::load_corpus(corpus_path), bucket_years);
  if (!out) {
    corpus::write_stats_csv(ctx.out, rows);
    return;
  }
  auto f = open_out(*out);
  corpus::write_stats_csv(f, rows);
  write_manifest(ctx, manifest_for(*out),
                 {"stats", {{"bucket_years", bucket_years}}, {}, {{"corpus", corpus_path}}, {{"stats", *out}}});
}

void cmd_train(Context& ctx, const fs::path& config_path, const TrainOverrides& ov, const fs::path& out_dir) {
  auto cfg = load_config(config_path);
  ov.apply(cfg);
  const auto data = load_data(cfg.data);
  const auto res = resources_from(cfg.resources);
  const auto report = train_one(ctx, cfg, data, res, cfg.training.seed, out_dir);
  auto j = training::to_json(report);
  j["final_split"] = data.test.empty() ? "dev" : "test";
  training::save_json(out_dir / "report.json", j);
  Manifest m{"train", to_json(cfg), {cfg.training.seed}, {{"config", config_path}},
             {{"checkpoint", out_dir / "model.ckpt"}, {"report", out_dir / "report.json"}}};
  add_data_inputs(m, cfg);
  write_manifest(ctx, out_dir / "manifest.json", m);
}

void cmd_multiseed(Context& ctx, const fs::path& config_path, const TrainOverrides& ov, std::size_t n,
                   std::size_t jobs, const fs::path& out_dir) {
  auto cfg = load_config(config_path);
  ov.apply(cfg);
  const auto data = load_data(cfg.data);
  const auto res = resources_from(cfg.resources);
  const auto seed0 = cfg.training.seed;
  auto agg = training::run_multiseed(
      [&](std::uint64_t seed) {
        return train_one(ctx, cfg, data, res, seed, out_dir / ("run-" + std::to_string(seed)));
      },
      seed0, n, jobs, out_dir);
  Manifest m{"multiseed", to_json(cfg), {}, {{"config", config_path}}, {{"aggregate", out_dir / "aggregate.json"}}};
  for (std::size_t i = 0; i < n; ++i) {
    m.seeds.push_back(seed0 + i);
    m.outputs["report-" + std::to_string(seed0 + i)] = training::run_report_path(out_dir, seed0 + i);
  }
  add_data_inputs(m, cfg);
  write_manifest(ctx, out_dir / "manifest.json", m);
  ctx.out << training::to_json(agg).dump(2) << '\n';
}

void cmd_eval(Context& ctx, const fs::path& model_path, const fs::path& corpus_path,
              const std::optional<fs::path>& external, const std::optional<fs::path>& out,
              const std::optional<fs::path>& preds_out) {
  auto loaded = training::load_checkpoint(model_path, external_only(external));
  const auto ev = training::evaluate(loaded.model, corpus::load_corpus(corpus_path));
  auto j = training::to_json(ev.metrics);
  j["mean_loss"] = ev.mean_loss;
  if (preds_out) {
    auto preds = ev.predictions;
    training::sort_predictions(preds);
    auto f = open_out(*preds_out);
    training::write_predictions(f, preds);
  }
  if (!out) {
    ctx.out << j.dump(2) << '\n';
    return;
  }
  training::save_json(*out, j);
  Manifest m{"eval", {}, {loaded.model.seed()}, {{"model", model_path}, {"corpus", corpus_path}}, {{"metrics", *out}}};
  if (external) m.inputs["external_vectors"] = *external;
  if (preds_out) m.outputs["predictions"] = *preds_out;
  write_manifest(ctx, manifest_for(*out), m);
}

void cmd_tag(Context& ctx, const fs::path& model_path, const fs::path& corpus_path,
             const std::optional<fs::path>& external, const fs::path& out) {
  auto loaded = training::load_checkpoint(model_path, external_only(external));
  const auto preds = training::tag_corpus(loaded.model, corpus::load_corpus(corpus_path));
  auto f = open_out(out);
  training::write_predictions(f, preds);
  f.close();
  Manifest m{"tag", {}, {loaded.model.seed()}, {{"model", model_path}, {"corpus", corpus_path}}, {{"predictions", out}}};
  if (external) m.inputs["external_vectors"] = *external;
  write_manifest(ctx, manifest_for(out), m);
  ctx.log("tagged " + std::to_string(preds.size()) + " sentences");
}

void cmd_baseline(Context& ctx, int variant, const fs::path& inventory, const std::optional<fs::path>& stopwords,
                  const fs::path& corpus_path, const std::optional<fs::path>& out) {
  auto rows = baselines::load_inventory(inventory);
  if (stopwords) baselines::mark_stopwords(rows, baselines::load_stopwords(*stopwords));
  if (variant < 1 || variant > 4) throw ValidationError("--variant must be 1, 2, 3 or 4");
  const auto lex = baselines::build_baseline(rows, variant);
  const auto res = baselines::evaluate_baseline(lex, corpus::load_corpus(corpus_path));
  auto j = training::to_json(res.metrics);
  auto lj = baselines::to_json(lex);
  lj.erase("lemmas");
  j["lexicon"] = lj;
  if (!out) {
    ctx.out << j.dump(2) << '\n';
    return;
  }
  training::save_json(*out, j);
  Manifest m{"baseline", {{"variant", variant}}, {}, {{"inventory", inventory}, {"corpus", corpus_path}}, {{"metrics", *out}}};
  if (stopwords) m.inputs["stopwords"] = *stopwords;
  write_manifest(ctx, manifest_for(*out), m);
}

void emit_csv(Context& ctx, const std::optional<fs::path>& out, const std::function<void(std::ostream&)>& write,
              Manifest m) {
  if (!out) {
    write(ctx.out);
    return;
  }
  {
    auto f = open_out(*out);
    write(f);
  }
  m.outputs["csv"] = *out;
  write_manifest(ctx, manifest_for(*out), m);
}

std::vector<std::string> split_marks(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<corpus::AuthorMeta> load_personas(const std::optional<fs::path>& path,
                                              const std::vector<corpus::SentenceRecord>& records) {
  std::vector<corpus::AuthorMeta> out;
  if (path) {
    const auto j = training::load_json(*path);
    if (!j.is_array()) throw ValidationError(path->string() + ": personas must be a JSON array");
    for (const auto& p : j) out.push_back(corpus::meta_from_json(p));
    return out;
  }
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.metadata.author).second) out.push_back(r.metadata);
  }
  return out;
}

void cmd_serve(Context& ctx, const fs::path& predictions, const fs::path& corpus_path, const fs::path& log,
               const std::string& bind, const std::optional<fs::path>& static_dir) {
  review::ServeOptions opts;
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ValidationError("--bind must be host:port");
  opts.host = bind.substr(0, colon);
  try {
    opts.port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("--bind: bad port in '" + bind + "'");
  }
  opts.static_dir = static_dir;
  review::ReviewService service(load_predictions(predictions), corpus::load_corpus(corpus_path), log);
  review::HttpServer server(service, opts);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  const int port = server.bind();
  ctx.log("serving on http://" + opts.host + ":" + std::to_string(port) + " (log " + log.string() + ")");
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.listen();
  // listen() returned on its own: wake the waiter.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
}

void cmd_export(Context& ctx, const fs::path& predictions, const fs::path& corpus_path, const fs::path& log,
                const fs::path& out) {
  if (!fs::exists(log)) throw ValidationError("decision log not found: " + log.string());
  review::DecisionLog dl(log);
  const auto accepted = review::export_accepted(dl.replay(), load_predictions(predictions), corpus::load_corpus(corpus_path));
  ensure_parent(out);
  corpus::save_corpus(out, accepted);
  write_manifest(ctx, manifest_for(out),
                 {"export", {}, {}, {{"predictions", predictions}, {"corpus", corpus_path}, {"log", log}}, {{"fragment", out}}});
  ctx.log("exported " + std::to_string(accepted.size()) + " accepted sentences");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Context ctx(out, err, std::vector<std::string>(argv, argv + argc));
  CLI::App app{"semtag: sentence-level semantic tagging toolkit"};
  app.set_version_flag("--version", SEMTAG_VERSION);
  app.require_subcommand(1);
  app.add_flag("-q,--quiet", ctx.quiet, "Suppress progress output");
  std::function<void()> action;

  // split
  fs::path corpus_path, out_path, model_path, config_path, inventory, works, positives, log_path, preds_path;
  std::optional<fs::path> opt_out, external, stopwords, materialize, preds_out, personas_path, static_dir;
  std::string split_name = "full", bind = "127.0.0.1:8080", marks = ". ! ? ; : ,";
  std::uint64_t seed = 1;
  double ratio = 1.0;
  std::size_t k = 1, n_seeds = 10, jobs = 1, buckets = 10;
  int bucket_years = 100, variant = 1;
  TrainOverrides ov;
  std::vector<std::string> disguise_models;

  auto* split = app.add_subcommand("split", "Build a seeded train/dev/test split");
  split->add_option("--corpus", corpus_path, "Annotated corpus (JSON lines)")->required();
  split->add_option("--name", split_name, "full or partial")->check(CLI::IsMember({"full", "partial"}));
  split->add_option("--seed", seed, "Shuffle seed");
  split->add_option("--ratio", ratio, "Scale every split target");
  split->add_option("--out", out_path, "Split file (JSON ids)")->required();
  split->add_option("--materialize", materialize, "Also write train/dev/test.jsonl into this directory");
  split->callback([&] { action = [&] { cmd_split(ctx, corpus_path, split_name, seed, ratio, out_path, materialize); }; });

  auto* sample = app.add_subcommand("sample-negatives", "Draw k negatives per work");
  sample->add_option("--works", works, "Unannotated sentences (JSON lines)")->required();
  sample->add_option("--positives", positives, "Known positives (JSON lines)")->required();
  sample->add_option("--k", k, "Sentences per work")->required();
  sample->add_option("--seed", seed, "Sampling seed");
  sample->add_option("--out", out_path, "Output negatives (JSON lines)")->required();
  sample->callback([&] { action = [&] { cmd_sample(ctx, works, positives, k, seed, out_path); }; });

  auto* stats = app.add_subcommand("stats", "Word and style distribution by period");
  stats->add_option("--corpus", corpus_path, "Corpus (JSON lines)")->required();
  stats->add_option("--bucket-years", bucket_years, "Bucket width in years");
  stats->add_option("--out", opt_out, "CSV output (stdout if omitted)");
  stats->callback([&] { action = [&] { cmd_stats(ctx, corpus_path, bucket_years, opt_out); }; });

  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("--config", config_path, "Experiment config (YAML)")->required();
  train->add_option("--out", out_path, "Output directory")->required();
  ov.add(train);
  train->callback([&] { action = [&] { cmd_train(ctx, config_path, ov, out_path); }; });

  auto* multi = app.add_subcommand("multiseed", "Train n seeds and aggregate");
  multi->add_option("--config", config_path, "Experiment config (YAML)")->required();
  multi->add_option("--out", out_path, "Output directory")->required();
  multi->add_option("--n", n_seeds, "Number of seeds (from the config seed upwards)");
  multi->add_option("--jobs", jobs, "Concurrent runs");
  ov.add(multi);
  multi->callback([&] { action = [&] { cmd_multiseed(ctx, config_path, ov, n_seeds, jobs, out_path); }; });

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled corpus");
  eval->add_option("--model", model_path, "Checkpoint")->required();
  eval->add_option("--corpus", corpus_path, "Labeled corpus (JSON lines)")->required();
  eval->add_option("--external", external, "External per-token vectors (JSON lines)");
  eval->add_option("--out", opt_out, "Metrics JSON (stdout if omitted)");
  eval->add_option("--predictions", preds_out, "Also write predictions");
  eval->callback([&] { action = [&] { cmd_eval(ctx, model_path, corpus_path, external, opt_out, preds_out); }; });

  auto* base = app.add_subcommand("baseline", "Lemma-lexicon baseline");
  base->add_option("--variant", variant, "1..4")->required();
  base->add_option("--inventory", inventory, "Inventory CSV")->required();
  base->add_option("--stopwords", stopwords, "Stopword list, one lemma per line");
  base->add_option("--corpus", corpus_path, "Labeled corpus (JSON lines)")->required();
  base->add_option("--out", opt_out, "Metrics JSON (stdout if omitted)");
  base->callback([&] { action = [&] { cmd_baseline(ctx, variant, inventory, stopwords, corpus_path, opt_out); }; });

  auto* tag = app.add_subcommand("tag", "Tag a corpus with a checkpoint");
  tag->add_option("--model", model_path, "Checkpoint")->required();
  tag->add_option("--corpus", corpus_path, "Corpus (JSON lines)")->required();
  tag->add_option("--external", external, "External per-token vectors (JSON lines)");
  tag->add_option("--out", out_path, "Predictions (JSON lines)")->required();
  tag->callback([&] { action = [&] { cmd_tag(ctx, model_path, corpus_path, external, out_path); }; });

  auto* diag = app.add_subcommand("diagnose", "Attention and bias diagnostics");
  diag->require_subcommand(1);
  auto* ranks = diag->add_subcommand("ranks", "Relative attention rank of gold tokens (TP vs FN)");
  ranks->add_option("--predictions", preds_path, "Predictions with attention")->required();
  ranks->add_option("--corpus", corpus_path, "Gold corpus")->required();
  ranks->add_option("--buckets", buckets, "Histogram buckets");
  ranks->add_option("--out", opt_out, "CSV output (stdout if omitted)");
  ranks->callback([&] {
    action = [&] {
      const auto an = diagnostics::analyze_ranks(load_predictions(preds_path), corpus::load_corpus(corpus_path));
      const auto h = diagnostics::rank_histogram(an, buckets);
      emit_csv(ctx, opt_out, [&](std::ostream& o) { diagnostics::write_rank_csv(o, h); },
               {"diagnose ranks", {{"buckets", buckets}}, {}, {{"predictions", preds_path}, {"corpus", corpus_path}}, {}});
    };
  });
  auto* punct = diag->add_subcommand("punctuation", "Top-attention rate per punctuation mark");
  punct->add_option("--predictions", preds_path, "Predictions with attention")->required();
  punct->add_option("--corpus", corpus_path, "Corpus")->required();
  punct->add_option("--marks", marks, "Space-separated marks");
  punct->add_option("--out", opt_out, "CSV output (stdout if omitted)");
  punct->callback([&] {
    action = [&] {
      const auto t = diagnostics::punctuation_attention_stats(load_predictions(preds_path),
                                                              corpus::load_corpus(corpus_path), split_marks(marks));
      emit_csv(ctx, opt_out, [&](std::ostream& o) { diagnostics::write_punctuation_csv(o, t); },
               {"diagnose punctuation", {{"marks", marks}}, {}, {{"predictions", preds_path}, {"corpus", corpus_path}}, {}});
    };
  });
  auto* disguise = diag->add_subcommand("disguise", "Re-tag under other authors' metadata");
  disguise->add_option("--model", disguise_models, "name=checkpoint, repeatable")->required();
  disguise->add_option("--corpus", corpus_path, "Corpus of one text")->required();
  disguise->add_option("--personas", personas_path, "JSON array of metadata (default: authors in the corpus)");
  disguise->add_option("--external", external, "External per-token vectors (JSON lines)");
  disguise->add_option("--out", opt_out, "CSV output (stdout if omitted)");
  disguise->callback([&] {
    action = [&] {
      const auto records = corpus::load_corpus(corpus_path);
      const auto res = external_only(external);
      std::vector<training::LoadedCheckpoint> loaded;
      Manifest m{"diagnose disguise", {}, {}, {{"corpus", corpus_path}}, {}};
      loaded.reserve(disguise_models.size());
      std::vector<std::string> names;
      for (const auto& spec : disguise_models) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("--model expects name=checkpoint, got '" + spec + "'");
        names.push_back(spec.substr(0, eq));
        const fs::path p = spec.substr(eq + 1);
        loaded.push_back(training::load_checkpoint(p, res));
        m.inputs["model-" + names.back()] = p;
      }
      std::vector<diagnostics::DisguiseModel> models;
      for (std::size_t i = 0; i < loaded.size(); ++i) models.push_back({names[i], &loaded[i].model});
      const auto cells = diagnostics::disguise_experiment(models, records, load_personas(personas_path, records));
      if (personas_path) m.inputs["personas"] = *personas_path;
      emit_csv(ctx, opt_out, [&](std::ostream& o) { diagnostics::write_disguise_csv(o, cells); }, m);
    };
  });

  auto* serve = app.add_subcommand("serve", "Run the review service");
  serve->add_option("--predictions", preds_path, "Predictions (JSON lines)")->required();
  serve->add_option("--corpus", corpus_path, "Corpus aligned with the predictions")->required();
  serve->add_option("--log", log_path, "Decision log (JSON lines, created if missing)")->required();
  serve->add_option("--bind", bind, "host:port (port 0 picks a free port)");
  serve->add_option("--static", static_dir, "Directory served at / (review UI build)");
  serve->callback([&] { action = [&] { cmd_serve(ctx, preds_path, corpus_path, log_path, bind, static_dir); }; });

  auto* exp = app.add_subcommand("export", "Export accepted sentences as a corpus fragment");
  exp->add_option("--predictions", preds_path, "Predictions (JSON lines)")->required();
  exp->add_option("--corpus", corpus_path, "Corpus aligned with the predictions")->required();
  exp->add_option("--log", log_path, "Decision log")->required();
  exp->add_option("--out", out_path, "Output fragment (JSON lines)")->required();
  exp->callback([&] { action = [&] { cmd_export(ctx, preds_path, corpus_path, log_path, out_path); }; });

  app.failure_message(CLI::FailureMessage::help);
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.empty() || a[0] == '-') continue;
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == a;
    if (!known) {
      err << "error: unknown subcommand '" << a << "'\n" << app.help();
      return exit_validation;
    }
    break;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_validation;
  }
  try {
    action();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_ok;
}

}  // namespace semtag::cli
