//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//
// mcsret: generate, label, train, evaluate, retrieve, explain, verify.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcsret/align.h"
#include "mcsret/graph.h"
#include "mcsret/metrics.h"
#include "mcsret/oracle.h"
#include "mcsret/parallel.h"
#include "mcsret/params.h"
#include "mcsret/sampler.h"
#include "mcsret/scorers.h"
#include "mcsret/trainer.h"
#include "mcsret/verify.h"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mcsret;

namespace {

enum ExitCode {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kSchema = 3,
  kMissingFile = 4,
  kParse = 5,
  kSize = 6,
  kCheckpoint = 7,
  kGeneration = 8,
  kTraining = 9,
  kVerifyFailed = 10,
  kIo = 11,
};

class MissingFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VerifyFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  CLI::App *app = nullptr;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string data_dir;
  std::vector<std::string> argv;
};

std::string resolve(const Context &ctx, const std::string &path) {
  if (path.empty() || fs::path(path).is_absolute() || ctx.data_dir.empty()) return path;
  return (fs::path(ctx.data_dir) / path).string();
}

std::string require_file(const Context &ctx, const std::string &path) {
  std::string p = resolve(ctx, path);
  if (!fs::is_regular_file(p)) throw MissingFileError("no such file: " + p);
  return p;
}

void ensure_dir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string canonical(const std::string &p) { return fs::weakly_canonical(fs::absolute(p)).string(); }

void forbid_overwrite(const std::vector<std::string> &inputs,
                      const std::vector<std::string> &outputs) {
  std::set<std::string> in;
  for (const auto &p : inputs) in.insert(canonical(p));
  for (const auto &p : outputs) {
    if (in.count(canonical(p))) throw ValidationError("output would overwrite input " + p);
  }
}

// Root options plus those of the selected subcommand, with defaults.
json effective_config(CLI::App *app) {
  json out = json::object();
  auto add = [&](CLI::App *a, const std::string &prefix) {
    for (const CLI::Option *o : a->get_options()) {
      if (o->get_lnames().empty()) continue;
      const std::string &name = o->get_lnames().front();
      if (name == "help" || name == "version" || name == "config") continue;
      if (o->count() > 0) {
        const auto &r = o->results();
        out[prefix + name] = r.size() == 1 ? json(r.front()) : json(r);
      } else if (!o->get_default_str().empty()) {
        out[prefix + name] = o->get_default_str();
      }
    }
  };
  add(app, "");
  for (CLI::App *sub : app->get_subcommands()) add(sub, sub->get_name() + ".");
  return out;
}

class Manifest {
 public:
  Manifest(const Context &ctx, const std::string &command) : start_(Clock::now()), last_(start_) {
    j_["command"] = command;
    j_["argv"] = ctx.argv;
    j_["seed"] = ctx.seed;
    j_["workers"] = ctx.workers;
    j_["data_dir"] = ctx.data_dir;
    j_["version"] = MCSRET_VERSION;
    j_["config"] = effective_config(ctx.app);
    j_["inputs"] = json::object();
    j_["outputs"] = json::object();
    j_["timings"] = json::object();
  }

  void input(const std::string &key, const std::string &path) {
    j_["inputs"][key] = {{"path", path}, {"bytes", fs::file_size(path)}};
  }
  void output(const std::string &key, const std::string &path) { j_["outputs"][key] = path; }
  json &extra() { return j_["details"]; }

  void phase(const std::string &name) {
    auto now = Clock::now();
    j_["timings"][name] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

  void write(const std::string &path) {
    j_["timings"]["total"] = std::chrono::duration<double>(Clock::now() - start_).count();
    write_file(path, j_.dump(2) + "\n");
  }

 private:
  using Clock = std::chrono::steady_clock;
  json j_;
  Clock::time_point start_, last_;
};

std::vector<Graph> load_graphs(const Context &ctx, const std::string &path, Manifest &m,
                               const std::string &key) {
  std::string p = require_file(ctx, path);
  m.input(key, p);
  return load_dataset(p);
}

const Graph &find_graph(const std::vector<Graph> &graphs, const std::string &id,
                        const std::string &what) {
  for (const Graph &g : graphs) {
    if (g.id() == id) return g;
  }
  throw ValidationError("unknown " + what + " id '" + id + "'");
}

int find_index(const std::vector<Graph> &graphs, const std::string &id, const std::string &what) {
  return static_cast<int>(&find_graph(graphs, id, what) - graphs.data());
}

// ---- gen-data

struct GenDataOptions {
  std::string sources;
  std::string profile = "desk";
  std::string out;
  int source_count = 20;
  int source_side = 12;
  std::optional<int> min_nodes, max_nodes, corpus_count, query_count, augment_min, augment_max,
      eta_attempts;
  std::optional<double> eta_low, eta_high, augment_edge_prob;
};

void setup_gen_data(CLI::App &app, GenDataOptions &o) {
  auto *c = app.add_subcommand("gen-data", "Sample corpus and query graphs");
  c->add_option("--sources", o.sources, "Source graphs (dataset file); synthetic if omitted");
  c->add_option("--profile", o.profile, "Size profile")->check(CLI::IsMember({"desk", "full"}));
  c->add_option("--out", o.out, "Output directory")->required();
  c->add_option("--source-count", o.source_count, "Synthetic source count")
      ->check(CLI::PositiveNumber);
  c->add_option("--source-side", o.source_side, "Synthetic lattice side")
      ->check(CLI::PositiveNumber);
  c->add_option("--min-nodes", o.min_nodes);
  c->add_option("--max-nodes", o.max_nodes);
  c->add_option("--eta-low", o.eta_low);
  c->add_option("--eta-high", o.eta_high);
  c->add_option("--corpus-count", o.corpus_count);
  c->add_option("--query-count", o.query_count);
  c->add_option("--augment-min", o.augment_min);
  c->add_option("--augment-max", o.augment_max);
  c->add_option("--augment-edge-prob", o.augment_edge_prob);
  c->add_option("--eta-attempts", o.eta_attempts);
}

template <typename T>
void override(T &field, const std::optional<T> &value) {
  if (value) field = *value;
}

int run_gen_data(const Context &ctx, const GenDataOptions &o) {
  Manifest m(ctx, "gen-data");
  SamplerConfig cfg =
      o.profile == "full" ? SamplerConfig::full_profile() : SamplerConfig::desk_profile();
  override(cfg.min_nodes, o.min_nodes);
  override(cfg.max_nodes, o.max_nodes);
  override(cfg.eta_low, o.eta_low);
  override(cfg.eta_high, o.eta_high);
  override(cfg.corpus_count, o.corpus_count);
  override(cfg.query_count, o.query_count);
  override(cfg.augment_min, o.augment_min);
  override(cfg.augment_max, o.augment_max);
  override(cfg.augment_edge_prob, o.augment_edge_prob);
  override(cfg.eta_attempts, o.eta_attempts);
  cfg.seed = ctx.seed;
  cfg.validate();

  std::vector<Graph> sources;
  std::vector<std::string> inputs;
  if (o.sources.empty()) {
    sources = synthetic_sources(o.source_count, o.source_side, mix_seed(ctx.seed, 0x50c));
  } else {
    sources = load_graphs(ctx, o.sources, m, "sources");
    inputs.push_back(resolve(ctx, o.sources));
  }
  m.phase("load");
  GeneratedDataset d = generate_dataset(sources, cfg);
  m.phase("generate");

  std::string dir = resolve(ctx, o.out);
  ensure_dir(dir);
  std::string corpus = dir + "/corpus.tsv", queries = dir + "/queries.tsv",
              seeds = dir + "/seed_queries.tsv";
  forbid_overwrite(inputs, {corpus, queries, seeds});
  save_dataset(d.corpus, corpus);
  save_dataset(d.queries, queries);
  save_dataset(d.seed_queries, seeds);
  m.output("corpus", corpus);
  m.output("queries", queries);
  m.output("seed_queries", seeds);
  m.extra()["seed_fractions"] = d.seed_fractions;
  m.extra()["seed_attempts"] = d.seed_attempts;
  m.extra()["synthetic_sources"] = o.sources.empty();
  m.phase("write");
  m.write(dir + "/manifest.json");
  std::cout << "corpus\t" << d.corpus.size() << "\nqueries\t" << d.queries.size()
            << "\nseed_attempts\t" << d.seed_attempts << '\n';
  return kOk;
}

// ---- label

struct LabelOptions {
  std::string queries = "queries.tsv";
  std::string corpus = "corpus.tsv";
  std::string out = "labels.tsv";
  std::optional<double> combo_a;
  std::int64_t budget = SearchBudget{}.max_nodes;
};

void setup_label(CLI::App &app, LabelOptions &o) {
  auto *c = app.add_subcommand("label", "Exact MCES/MCCS labels for every query-corpus pair");
  c->add_option("--queries", o.queries, "Query dataset file");
  c->add_option("--corpus", o.corpus, "Corpus dataset file");
  c->add_option("--out", o.out, "Label file");
  c->add_option("--combo-a", o.combo_a, "Also write a*y_mccs + (1-a)*y_mces")
      ->check(CLI::Range(0.0, 1.0));
  c->add_option("--budget", o.budget, "Branch-and-bound expansions per pair")
      ->check(CLI::PositiveNumber);
}

int run_label(const Context &ctx, const LabelOptions &o) {
  Manifest m(ctx, "label");
  std::vector<Graph> queries = load_graphs(ctx, o.queries, m, "queries");
  std::vector<Graph> corpus = load_graphs(ctx, o.corpus, m, "corpus");
  m.phase("load");
  std::string out = resolve(ctx, o.out);
  forbid_overwrite({resolve(ctx, o.queries), resolve(ctx, o.corpus)}, {out});
  LabelStats stats;
  std::vector<LabelRecord> labels =
      label_pairs(queries, corpus, o.combo_a, SearchBudget{o.budget}, ctx.workers, &stats);
  m.phase("label");
  if (fs::path(out).has_parent_path()) ensure_dir(fs::path(out).parent_path().string());
  save_labels(labels, out);
  m.output("labels", out);
  m.extra()["pairs"] = stats.pairs;
  m.extra()["unproven"] = stats.unproven;
  m.phase("write");
  m.write(out + ".manifest.json");
  std::cout << "pairs\t" << stats.pairs << "\nunproven\t" << stats.unproven << '\n';
  if (stats.unproven > 0) {
    std::cerr << "warning: " << stats.unproven
              << " pairs hit the search budget; their labels are lower bounds\n";
  }
  return kOk;
}

// ---- train

struct TrainOptions {
  std::string queries = "queries.tsv";
  std::string corpus = "corpus.tsv";
  std::string labels = "labels.tsv";
  std::string out;
  std::string model = "lmces";
  std::string target = "mces";
  std::vector<double> split{0.6, 0.2, 0.2};
  double combo_a = 0.5;
  std::vector<double> lambda;
  std::string dataset_tag;
  int epochs = 500;
  int batch_size = 128;
  int patience = 50;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  int layers = 5;
  int pad_size = 0;
  int gossip_steps = 0;
  double zeta = 0.1;
  int sinkhorn_iterations = 20;
  bool gumbel = false;
  bool progress = false;
};

void setup_train(CLI::App &app, TrainOptions &o) {
  auto *c = app.add_subcommand("train", "Train a neural scorer");
  c->add_option("--queries", o.queries);
  c->add_option("--corpus", o.corpus);
  c->add_option("--labels", o.labels);
  c->add_option("--out", o.out, "Output directory")->required();
  c->add_option("--model", o.model)
      ->check(CLI::IsMember({"lmces", "lmccs", "xmcs", "combo", "baseline"}));
  c->add_option("--target", o.target)->check(CLI::IsMember({"mces", "mccs", "combo"}));
  c->add_option("--split", o.split, "Train, validation and test fractions")->expected(3);
  c->add_option("--combo-a", o.combo_a)->check(CLI::Range(0.0, 1.0));
  c->add_option("--lambda", o.lambda, "Gossip temperature grid; empty uses --dataset-tag")
      ->expected(0, -1);
  c->add_option("--dataset-tag", o.dataset_tag, "MM, MR, FM, FR, DD, COX2 or MSRC");
  c->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  c->add_option("--batch-size", o.batch_size)->check(CLI::PositiveNumber);
  c->add_option("--patience", o.patience)->check(CLI::PositiveNumber);
  c->add_option("--lr", o.lr);
  c->add_option("--weight-decay", o.weight_decay);
  c->add_option("--layers", o.layers)->check(CLI::PositiveNumber);
  c->add_option("--pad-size", o.pad_size, "0: largest graph in the data");
  c->add_option("--gossip-steps", o.gossip_steps, "0: padded size");
  c->add_option("--zeta", o.zeta, "Sinkhorn temperature");
  c->add_option("--sinkhorn-iterations", o.sinkhorn_iterations)->check(CLI::PositiveNumber);
  c->add_flag("--gumbel", o.gumbel, "Gumbel noise in Sinkhorn during training");
  c->add_flag("--progress", o.progress, "Per-epoch losses on stderr");
}

struct Data {
  std::vector<Graph> queries, corpus;
  std::vector<LabelRecord> labels;
  std::vector<std::string> paths;
};

Data load_data(const Context &ctx, Manifest &m, const std::string &queries,
               const std::string &corpus, const std::string &labels) {
  Data d;
  d.queries = load_graphs(ctx, queries, m, "queries");
  d.corpus = load_graphs(ctx, corpus, m, "corpus");
  std::string lp = require_file(ctx, labels);
  m.input("labels", lp);
  d.labels = load_labels(lp);
  d.paths = {resolve(ctx, queries), resolve(ctx, corpus), lp};
  return d;
}

Split split_from_meta(const std::map<std::string, std::string> &meta, int count) {
  auto get = [&](const std::string &k) {
    auto it = meta.find(k);
    if (it == meta.end()) throw CheckpointError("checkpoint has no '" + k + "' entry");
    return it->second;
  };
  return split_queries(count, std::stod(get("split_train")), std::stod(get("split_val")),
                       std::stod(get("split_test")), std::stoull(get("split_seed")));
}

int run_train(const Context &ctx, const TrainOptions &o) {
  Manifest m(ctx, "train");
  Data d = load_data(ctx, m, o.queries, o.corpus, o.labels);
  Target target = parse_target(o.target);
  TargetTable table = target_table(d.labels, d.queries, d.corpus, target, o.combo_a);
  Split split = split_queries(static_cast<int>(d.queries.size()), o.split[0], o.split[1],
                              o.split[2], ctx.seed);
  m.phase("load");

  ModelConfig mc;
  mc.kind = parse_model_kind(o.model);
  mc.encoder.layers = o.layers;
  mc.encoder.cross_input = mc.kind == ModelKind::kXmcs;
  mc.pad_size = o.pad_size;
  mc.gossip_steps = o.gossip_steps;
  mc.sinkhorn.zeta = o.zeta;
  mc.sinkhorn.iterations = o.sinkhorn_iterations;
  mc.sinkhorn.gumbel_noise = o.gumbel;
  mc.validate();

  TrainConfig tc;
  tc.batch_size = o.batch_size;
  tc.patience = o.patience;
  tc.max_epochs = o.epochs;
  tc.adam.lr = o.lr;
  tc.adam.weight_decay = o.weight_decay;
  tc.seed = ctx.seed;
  if (o.progress) {
    tc.on_epoch = [](int epoch, double tr, double va) {
      std::cerr << "epoch " << epoch << "\ttrain " << tr << "\tval " << va << '\n';
    };
  }

  const std::uint64_t init_seed = mix_seed(ctx.seed, 0x1417);
  const bool uses_lambda = mc.kind == ModelKind::kLmccs || mc.kind == ModelKind::kCombo;
  TrainResult result;
  std::vector<std::pair<double, double>> lambda_table;
  if (uses_lambda) {
    LambdaSearch s = tune_lambda(mc, init_seed, o.lambda, o.dataset_tag, d.queries, d.corpus,
                                 table, split, tc);
    lambda_table = s.val_mse;
    result = std::move(s.best_run);
    m.extra()["best_lambda"] = s.best_lambda;
  } else {
    result = train(init_model(mc, init_seed), d.queries, d.corpus, table, split, tc);
  }
  m.phase("train");

  auto &meta = result.best.meta();
  meta["target"] = target_name(target);
  meta["combo_a"] = format_double(o.combo_a);
  meta["split_seed"] = std::to_string(ctx.seed);
  meta["split_train"] = format_double(o.split[0]);
  meta["split_val"] = format_double(o.split[1]);
  meta["split_test"] = format_double(o.split[2]);
  meta["best_epoch"] = std::to_string(result.best_epoch);

  std::string dir = resolve(ctx, o.out);
  ensure_dir(dir);
  std::string ckpt = dir + "/checkpoint.txt", hist = dir + "/history.tsv";
  forbid_overwrite(d.paths, {ckpt, hist});
  result.best.save(ckpt);
  write_file(hist, format_history(result.history));
  m.output("checkpoint", ckpt);
  m.output("history", hist);
  if (!lambda_table.empty()) {
    std::string lt = dir + "/lambda.tsv", text = "lambda\tbest_val_mse\n";
    for (const auto &[l, v] : lambda_table) text += format_double(l) + '\t' + format_double(v) + '\n';
    write_file(lt, text);
    m.output("lambda", lt);
  }
  m.extra()["best_epoch"] = result.best_epoch;
  m.extra()["best_val_mse"] = result.best_val_mse;
  m.extra()["epochs_run"] = result.history.size();
  m.extra()["split"] = {{"train", split.train.size()},
                        {"val", split.val.size()},
                        {"test", split.test.size()}};
  m.phase("write");
  m.write(dir + "/manifest.json");
  std::cout << "best_epoch\t" << result.best_epoch << "\nbest_val_mse\t"
            << format_double(result.best_val_mse) << '\n';
  return kOk;
}

// ---- eval

struct EvalOptions {
  std::string queries = "queries.tsv";
  std::string corpus = "corpus.tsv";
  std::string labels = "labels.tsv";
  std::string checkpoint;
  bool oracle = false;
  std::string target;
  std::string subset = "test";
  std::vector<double> split{0.6, 0.2, 0.2};
  double combo_a = 0.5;
  std::string tau = "b";
  std::string out;
};

void setup_eval(CLI::App &app, EvalOptions &o) {
  auto *c = app.add_subcommand("eval", "MSE, KTau and PairRank on a query split");
  c->add_option("--queries", o.queries);
  c->add_option("--corpus", o.corpus);
  c->add_option("--labels", o.labels);
  auto *ck = c->add_option("--checkpoint", o.checkpoint);
  auto *or_ = c->add_flag("--oracle", o.oracle, "Score with the labels themselves");
  ck->excludes(or_);
  c->add_option("--target", o.target, "Defaults to the checkpoint's target")
      ->check(CLI::IsMember({"mces", "mccs", "combo"}));
  c->add_option("--split", o.subset)->check(CLI::IsMember({"train", "val", "test", "all"}));
  c->add_option("--split-fractions", o.split, "Used with --oracle")->expected(3);
  c->add_option("--combo-a", o.combo_a)->check(CLI::Range(0.0, 1.0));
  c->add_option("--tau", o.tau, "Kendall variant")->check(CLI::IsMember({"a", "b"}));
  c->add_option("--out", o.out, "Output directory")->required();
}

std::vector<int> pick(const Split &s, const std::string &subset, int count) {
  if (subset == "train") return s.train;
  if (subset == "val") return s.val;
  if (subset == "test") return s.test;
  std::vector<int> all(count);
  for (int i = 0; i < count; ++i) all[i] = i;
  return all;
}

int run_eval(const Context &ctx, const EvalOptions &o) {
  if (o.checkpoint.empty() && !o.oracle) {
    throw ValidationError("eval needs --checkpoint or --oracle");
  }
  Manifest m(ctx, "eval");
  Data d = load_data(ctx, m, o.queries, o.corpus, o.labels);
  const int nq = static_cast<int>(d.queries.size());
  std::optional<ParameterStore> store;
  std::string model_label = "oracle";
  std::string target = o.target;
  Split split;
  double combo_a = o.combo_a;
  if (o.oracle) {
    split = split_queries(nq, o.split[0], o.split[1], o.split[2], ctx.seed);
    if (target.empty()) target = "mces";
  } else {
    std::string ck = require_file(ctx, o.checkpoint);
    m.input("checkpoint", ck);
    d.paths.push_back(ck);
    store = ParameterStore::load(ck);
    split = split_from_meta(store->meta(), nq);
    model_label = store->meta().count("model") ? store->meta().at("model") : "model";
    if (target.empty()) {
      auto it = store->meta().find("target");
      target = it == store->meta().end() ? "mces" : it->second;
    }
    if (store->meta().count("combo_a")) combo_a = std::stod(store->meta().at("combo_a"));
  }
  TargetTable table = target_table(d.labels, d.queries, d.corpus, parse_target(target), combo_a);
  std::vector<int> subset = pick(split, o.subset, nq);
  m.phase("load");

  std::vector<std::vector<double>> scores, labels;
  if (o.oracle) {
    for (int q : subset) scores.push_back(table[q]);
  } else {
    scores = predict(*store, d.queries, subset, d.corpus);
  }
  std::vector<std::string> ids;
  std::vector<ScoreRecord> records;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const int q = subset[i];
    ids.push_back(d.queries[q].id());
    labels.push_back(table[q]);
    for (std::size_t c = 0; c < d.corpus.size(); ++c) {
      records.push_back({d.queries[q].id(), d.corpus[c].id(), model_label, scores[i][c]});
    }
  }
  m.phase("score");
  MetricReport report =
      evaluate(ids, scores, labels, o.tau == "a" ? TauVariant::kA : TauVariant::kB);

  std::string dir = resolve(ctx, o.out);
  ensure_dir(dir);
  std::string rp = dir + "/report.tsv", sp = dir + "/scores.tsv";
  forbid_overwrite(d.paths, {rp, sp});
  write_file(rp, format_report(report));
  write_file(sp, format_scores(records));
  m.output("report", rp);
  m.output("scores", sp);
  m.extra()["target"] = target;
  m.extra()["split"] = o.subset;
  m.extra()["queries"] = subset.size();
  m.extra()["mse"] = report.mse.mean;
  m.extra()["ktau"] = report.ktau.mean;
  m.extra()["pairrank"] = report.pairrank.mean;
  m.phase("write");
  m.write(dir + "/manifest.json");
  std::cout << "mse\t" << format_double(report.mse.mean) << "\nktau\t"
            << format_double(report.ktau.mean) << "\npairrank\t"
            << format_double(report.pairrank.mean) << '\n';
  return kOk;
}

// ---- retrieve

struct RetrieveOptions {
  std::string queries = "queries.tsv";
  std::string corpus = "corpus.tsv";
  std::string checkpoint;
  std::vector<std::string> query_ids;
  int k = 10;
  std::string out;
};

void setup_retrieve(CLI::App &app, RetrieveOptions &o) {
  auto *c = app.add_subcommand("retrieve", "Top-k corpus graphs per query");
  c->add_option("--queries", o.queries);
  c->add_option("--corpus", o.corpus);
  c->add_option("--checkpoint", o.checkpoint)->required();
  c->add_option("--query-id", o.query_ids, "Repeatable; all queries if omitted");
  c->add_option("--k", o.k)->check(CLI::NonNegativeNumber);
  c->add_option("--out", o.out, "Ranking file")->required();
}

int run_retrieve(const Context &ctx, const RetrieveOptions &o) {
  Manifest m(ctx, "retrieve");
  std::vector<Graph> queries = load_graphs(ctx, o.queries, m, "queries");
  std::vector<Graph> corpus = load_graphs(ctx, o.corpus, m, "corpus");
  std::string ck = require_file(ctx, o.checkpoint);
  m.input("checkpoint", ck);
  Scorer scorer(ParameterStore::load(ck));
  scorer.index_corpus(corpus);
  m.phase("index");
  std::vector<std::string> ids;
  for (const Graph &c : corpus) ids.push_back(c.id());
  std::vector<const Graph *> chosen;
  if (o.query_ids.empty()) {
    for (const Graph &q : queries) chosen.push_back(&q);
  } else {
    for (const auto &id : o.query_ids) chosen.push_back(&find_graph(queries, id, "query"));
  }
  std::string text;
  for (const Graph *q : chosen) {
    text += format_ranking(q->id(), rank_scores(ids, scorer.score_corpus(*q), o.k));
  }
  m.phase("rank");
  std::string out = resolve(ctx, o.out);
  forbid_overwrite({resolve(ctx, o.queries), resolve(ctx, o.corpus), ck}, {out});
  if (fs::path(out).has_parent_path()) ensure_dir(fs::path(out).parent_path().string());
  write_file(out, text);
  m.output("ranking", out);
  m.write(out + ".manifest.json");
  std::cout << text;
  return kOk;
}

// ---- explain

struct ExplainOptions {
  std::string queries = "queries.tsv";
  std::string corpus = "corpus.tsv";
  std::string checkpoint;
  std::string query_id, corpus_id;
  std::string out;
};

void setup_explain(CLI::App &app, ExplainOptions &o) {
  auto *c = app.add_subcommand("explain", "Hungarian-rounded node alignment of one pair");
  c->add_option("--queries", o.queries);
  c->add_option("--corpus", o.corpus);
  c->add_option("--checkpoint", o.checkpoint)->required();
  c->add_option("--query-id", o.query_id)->required();
  c->add_option("--corpus-id", o.corpus_id)->required();
  c->add_option("--out", o.out, "Alignment file")->required();
}

int run_explain(const Context &ctx, const ExplainOptions &o) {
  Manifest m(ctx, "explain");
  std::vector<Graph> queries = load_graphs(ctx, o.queries, m, "queries");
  std::vector<Graph> corpus = load_graphs(ctx, o.corpus, m, "corpus");
  std::string ck = require_file(ctx, o.checkpoint);
  m.input("checkpoint", ck);
  Scorer scorer(ParameterStore::load(ck));
  const Graph &q = queries[find_index(queries, o.query_id, "query")];
  const Graph &c = corpus[find_index(corpus, o.corpus_id, "corpus")];
  AlignmentPlan plan = scorer.align(q, c);
  m.phase("align");
  std::string out = resolve(ctx, o.out);
  forbid_overwrite({resolve(ctx, o.queries), resolve(ctx, o.corpus), ck}, {out});
  if (fs::path(out).has_parent_path()) ensure_dir(fs::path(out).parent_path().string());
  std::string text = format_alignment(q, c, plan.hard);
  write_file(out, text);
  m.output("alignment", out);
  m.extra()["matched_edges"] = matched_edges(q, c, plan.hard).size();
  m.extra()["score"] = scorer.score(q, c);
  m.write(out + ".manifest.json");
  std::cout << text;
  return kOk;
}

// ---- verify

struct VerifyOptions {
  std::vector<std::string> suites;
  std::string out;
};

void setup_verify(CLI::App &app, VerifyOptions &o) {
  auto *c = app.add_subcommand("verify", "Built-in property checks");
  std::vector<std::string> names = verify_suites();
  c->add_option("--suite", o.suites, "Repeatable; all suites if omitted")
      ->check(CLI::IsMember(names));
  c->add_option("--out", o.out, "Also write the report here");
}

int run_verify(const Context &ctx, const VerifyOptions &o) {
  std::vector<std::string> suites = o.suites.empty() ? verify_suites() : o.suites;
  std::optional<Manifest> m;
  if (!o.out.empty()) m.emplace(ctx, "verify");
  std::string text;
  int failed = 0;
  for (const auto &s : suites) {
    VerifyReport r = run_verify_suite(s, ctx.seed);
    std::string part = format_verify(r);
    std::cout << part << std::flush;
    text += part;
    for (const auto &c : r.checks) failed += !c.passed();
    if (m) m->phase(s);
  }
  if (m) {
    std::string out = resolve(ctx, o.out);
    if (fs::path(out).has_parent_path()) ensure_dir(fs::path(out).parent_path().string());
    write_file(out, text);
    m->output("report", out);
    m->extra()["failed_checks"] = failed;
    m->write(out + ".manifest.json");
  }
  if (failed > 0) throw VerifyFailed(std::to_string(failed) + " check(s) failed");
  return kOk;
}

std::string one_line(std::string s) {
  for (char &ch : s) {
    if (ch == '\n' || ch == '\t') ch = ' ';
  }
  return s;
}

int fail(const std::string &cls, int code, const std::string &what) {
  std::cerr << "error\t" << cls << '\t' << one_line(what) << '\n';
  return code;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Graph retrieval by maximum common subgraph scores", "mcsret"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", MCSRET_VERSION);
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx;
  ctx.app = &app;
  ctx.workers = default_workers();
  ctx.argv.assign(argv, argv + argc);
  app.add_option("--seed", ctx.seed, "Random seed");
  app.add_option("--workers", ctx.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--data-dir", ctx.data_dir, "Base for relative paths")
      ->envname("MCSRET_DATA_DIR");

  GenDataOptions gen;
  LabelOptions lab;
  TrainOptions tr;
  EvalOptions ev;
  RetrieveOptions ret;
  ExplainOptions ex;
  VerifyOptions ver;
  setup_gen_data(app, gen);
  setup_label(app, lab);
  setup_train(app, tr);
  setup_eval(app, ev);
  setup_retrieve(app, ret);
  setup_explain(app, ex);
  setup_verify(app, ver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ConfigError &e) {
    return fail("schema", kSchema, e.what());
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", kUsage, e.what());
  }

  const std::map<std::string, std::function<int()>> commands = {
      {"gen-data", [&] { return run_gen_data(ctx, gen); }},
      {"label", [&] { return run_label(ctx, lab); }},
      {"train", [&] { return run_train(ctx, tr); }},
      {"eval", [&] { return run_eval(ctx, ev); }},
      {"retrieve", [&] { return run_retrieve(ctx, ret); }},
      {"explain", [&] { return run_explain(ctx, ex); }},
      {"verify", [&] { return run_verify(ctx, ver); }},
  };
  try {
    return commands.at(app.get_subcommands().front()->get_name())();
  } catch (const MissingFileError &e) {
    return fail("missing_file", kMissingFile, e.what());
  } catch (const mcsret::ParseError &e) {
    return fail("parse", kParse, e.what());
  } catch (const SizeError &e) {
    return fail("size", kSize, e.what());
  } catch (const CheckpointError &e) {
    return fail("checkpoint", kCheckpoint, e.what());
  } catch (const ValidationError &e) {
    return fail("schema", kSchema, e.what());
  } catch (const SamplingError &e) {
    return fail("generation", kGeneration, e.what());
  } catch (const IndeterminateError &e) {
    return fail("generation", kGeneration, e.what());
  } catch (const TrainingError &e) {
    return fail("training", kTraining, e.what());
  } catch (const VerifyFailed &e) {
    return fail("verify_failed", kVerifyFailed, e.what());
  } catch (const IoError &e) {
    return fail("io", kIo, e.what());
  } catch (const std::exception &e) {
    return fail("internal", kInternal, e.what());
  }
}
