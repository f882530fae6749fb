// crossrec: pipeline driver for the cross-domain recommender.
//
// Verbs: synth-gen, build-vocab, train-sdae, train, evaluate, recommend,
// gradcheck. Configuration is a flat JSON object; positional key=value
// arguments override config entries. Every run echoes the resolved config
// next to its artifacts.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "crossrec/dsn.hpp"
#include "crossrec/eval.hpp"
#include "crossrec/featurize.hpp"
#include "crossrec/gradcheck.hpp"
#include "crossrec/io.hpp"
#include "crossrec/sdae.hpp"
#include "crossrec/synth.hpp"
#include "crossrec/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace crossrec;

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out = "run";
  std::vector<std::string> overrides;
};

json load_config(const CommonArgs& args) {
  json cfg = json::object();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw std::runtime_error("cannot open config: " + args.config_path);
    in >> cfg;
    if (!cfg.is_object()) throw std::runtime_error("config must be a JSON object");
  }
  for (const std::string& ov : args.overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::runtime_error("override must be key=value: " + ov);
    const std::string key = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;  // bare strings need no quoting
    }
    cfg[key] = value;
  }
  if (args.seed_given || !cfg.contains("seed")) cfg["seed"] = args.seed;
  cfg["out"] = args.out;
  return cfg;
}

double num(const json& cfg, const std::string& key, double dflt) {
  return cfg.contains(key) ? cfg.at(key).get<double>() : dflt;
}
int integer(const json& cfg, const std::string& key, int dflt) {
  return cfg.contains(key) ? cfg.at(key).get<int>() : dflt;
}
bool boolean(const json& cfg, const std::string& key, bool dflt) {
  return cfg.contains(key) ? cfg.at(key).get<bool>() : dflt;
}
std::string str(const json& cfg, const std::string& key, const std::string& dflt) {
  return cfg.contains(key) ? cfg.at(key).get<std::string>() : dflt;
}
template <typename T>
std::vector<T> list(const json& cfg, const std::string& key, std::vector<T> dflt) {
  return cfg.contains(key) ? cfg.at(key).get<std::vector<T>>() : dflt;
}

void echo_config(const json& cfg, const std::string& out, const std::string& verb) {
  fs::create_directories(out);
  std::ofstream f(out + "/config-" + verb + ".json");
  f << cfg.dump(2) << "\n";
}

// ---- Shared pipeline assembly --------------------------------------------

struct Corpus {
  Catalog source_catalog;
  Catalog target_catalog;
  std::vector<LogEntry> source_logs;
  std::vector<LogEntry> target_logs;
  std::vector<LogEntry> test_logs;
  std::map<std::string, std::string> test_labels;
};

std::string data_dir(const json& cfg) {
  std::string d = str(cfg, "data.dir", "");
  if (d.empty())
    throw std::runtime_error("data.dir must point at the catalog/log directory");
  return d;
}

Corpus load_corpus(const std::string& dir, bool need_test) {
  Corpus c;
  c.source_catalog = load_catalog(dir + "/catalog_source.tsv");
  c.target_catalog = load_catalog(dir + "/catalog_target.tsv");
  c.source_logs = load_logs(dir + "/source_logs.tsv");
  c.target_logs = load_logs(dir + "/target_logs.tsv");
  if (need_test) {
    c.test_logs = load_logs(dir + "/test_logs.tsv");
    c.test_labels = load_test_labels(dir + "/test_labels.tsv");
  }
  return c;
}

std::string vocab_path(const json& cfg) {
  return str(cfg, "vocab.file", str(cfg, "out", "run") + "/vocab/vocab.tsv");
}

ItemFeatConfig item_feat_config(const Catalog& catalog) {
  std::set<std::string> cats;
  for (const auto& item : catalog.items) cats.insert(item.category);
  ItemFeatConfig fc;
  fc.categories.assign(cats.begin(), cats.end());
  return fc;
}

std::vector<SparseVec> item_feature_rows(const Catalog& catalog,
                                         const Vocabulary& vocab,
                                         const ItemFeatConfig& fc) {
  std::vector<SparseVec> rows;
  rows.reserve(catalog.items.size());
  for (const auto& item : catalog.items) rows.push_back(vectorize_item(item, vocab, fc));
  return rows;
}

SdaeConfig sdae_config(const json& cfg) {
  SdaeConfig sc;
  sc.hidden_dim = integer(cfg, "sdae.hidden_dim", sc.hidden_dim);
  sc.code_dim = integer(cfg, "sdae.code_dim", sc.code_dim);
  sc.input_corruption = num(cfg, "sdae.input_corruption", sc.input_corruption);
  sc.hidden_dropout = num(cfg, "sdae.hidden_dropout", sc.hidden_dropout);
  return sc;
}

DsnDims dsn_dims(const json& cfg, int input_dim, int num_labels) {
  DsnDims d;
  d.input_dim = input_dim;
  d.num_labels = num_labels;
  d.code_dim = integer(cfg, "model.code_dim", d.code_dim);
  d.user_dim = integer(cfg, "model.user_dim", d.user_dim);
  d.encoder_hidden = list<int>(cfg, "model.encoder_hidden", d.encoder_hidden);
  d.decoder_hidden = list<int>(cfg, "model.decoder_hidden", d.decoder_hidden);
  d.classifier_hidden = list<int>(cfg, "model.classifier_hidden", d.classifier_hidden);
  d.disc_hidden = list<int>(cfg, "model.disc_hidden", d.disc_hidden);
  d.encoder_dropout = num(cfg, "model.encoder_dropout", d.encoder_dropout);
  d.decoder_dropout = num(cfg, "model.decoder_dropout", d.decoder_dropout);
  d.classifier_dropout = num(cfg, "model.classifier_dropout", d.classifier_dropout);
  d.disc_dropout = num(cfg, "model.disc_dropout", d.disc_dropout);
  return d;
}

LossWeights loss_weights(const json& cfg) {
  LossWeights w;
  w.alpha = num(cfg, "loss.alpha", w.alpha);
  w.beta = num(cfg, "loss.beta", w.beta);
  w.gamma = num(cfg, "loss.gamma", w.gamma);
  w.lambda_item = num(cfg, "loss.lambda_item", w.lambda_item);
  w.lambda_ir = num(cfg, "loss.lambda_ir", w.lambda_ir);
  w.weight_decay = num(cfg, "loss.weight_decay", w.weight_decay);
  return w;
}

TrainConfig train_config(const json& cfg, std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = integer(cfg, "train.epochs", tc.epochs);
  tc.batch_size = integer(cfg, "train.batch_size", tc.batch_size);
  tc.lr = num(cfg, "train.lr", tc.lr);
  tc.seed = seed;
  tc.loss_weights = loss_weights(cfg);
  tc.candidate_count = integer(cfg, "train.candidate_count", tc.candidate_count);
  tc.weight_decay_grid =
      list<double>(cfg, "train.weight_decay_grid", tc.weight_decay_grid);
  const std::string sel = str(cfg, "train.selection", "ndcg100");
  if (sel == "ce")
    tc.selection = SelectionCriterion::kCrossEntropy;
  else if (sel == "ndcg100")
    tc.selection = SelectionCriterion::kNdcgAt100;
  else
    throw std::runtime_error("train.selection must be ce or ndcg100");
  tc.joint_sdae = boolean(cfg, "train.joint_sdae", tc.joint_sdae);
  tc.sdae_pretrain_epochs =
      integer(cfg, "train.sdae_pretrain_epochs", tc.sdae_pretrain_epochs);
  tc.validation_fraction =
      num(cfg, "train.validation_fraction", tc.validation_fraction);
  return tc;
}

// Method presets over the configured weights. I-DSN keeps every term, DSN
// drops the item autoencoder terms, NN keeps only task + reconstruction
// weight alpha at zero adaptation.
LossWeights method_weights(LossWeights w, const std::string& method) {
  if (method == "I-DSN") return w;
  if (method == "DSN") {
    w.lambda_item = 0.0;
    w.lambda_ir = 0.0;
    return w;
  }
  if (method == "NN") {
    w.beta = 0.0;
    w.gamma = 0.0;
    w.lambda_item = 0.0;
    w.lambda_ir = 0.0;
    return w;
  }
  throw std::runtime_error("unknown trained method: " + method);
}

struct Prepared {
  Dataset source;
  Dataset target;
  Dataset test;
  std::vector<SparseVec> item_features;
  int input_dim = 0;
  int num_labels = 0;
};

Prepared prepare(const Corpus& corpus, const Vocabulary& vocab, bool need_test) {
  Prepared p;
  auto src_hist = histories_from_logs(corpus.source_logs, "source");
  auto tgt_hist = histories_from_logs(corpus.target_logs, "target");
  p.source = build_source_examples(src_hist, corpus.source_catalog, vocab);
  p.target = build_target_examples(tgt_hist, corpus.target_catalog, vocab);
  if (need_test) {
    auto test_hist = histories_from_logs(corpus.test_logs, "target");
    p.test = build_test_examples(test_hist, corpus.target_catalog,
                                 corpus.source_catalog, corpus.test_labels, vocab);
  }
  ItemFeatConfig fc = item_feat_config(corpus.source_catalog);
  p.item_features = item_feature_rows(corpus.source_catalog, vocab, fc);
  p.input_dim = vocab.size();
  p.num_labels = static_cast<int>(corpus.source_catalog.items.size());
  return p;
}

// ---- Verbs ----------------------------------------------------------------

int cmd_synth_gen(const json& cfg) {
  SynthConfig sc;
  sc.num_items = integer(cfg, "synth.num_items", sc.num_items);
  sc.num_target_items = integer(cfg, "synth.num_target_items", sc.num_target_items);
  sc.num_topics = integer(cfg, "synth.num_topics", sc.num_topics);
  sc.vocab_source = integer(cfg, "synth.vocab_source", sc.vocab_source);
  sc.vocab_target = integer(cfg, "synth.vocab_target", sc.vocab_target);
  sc.n_source = integer(cfg, "synth.n_source", sc.n_source);
  sc.n_target = integer(cfg, "synth.n_target", sc.n_target);
  sc.n_test = integer(cfg, "synth.n_test", sc.n_test);
  sc.history_min = integer(cfg, "synth.history_min", sc.history_min);
  sc.history_max = integer(cfg, "synth.history_max", sc.history_max);
  sc.shift = num(cfg, "synth.shift", sc.shift);
  sc.topic_concentration = num(cfg, "synth.topic_concentration", sc.topic_concentration);
  sc.user_concentration = num(cfg, "synth.user_concentration", sc.user_concentration);
  sc.word_concentration = num(cfg, "synth.word_concentration", sc.word_concentration);
  sc.preference_temp = num(cfg, "synth.preference_temp", sc.preference_temp);
  sc.seed = cfg.at("seed").get<std::uint64_t>();
  sc.validate();

  const std::string out = cfg.at("out").get<std::string>();
  SynthTask task = generate(sc);
  fs::create_directories(out + "/data");
  save_task(task, out + "/data");
  echo_config(cfg, out, "synth-gen");
  std::printf("synth-gen: %zu source logs, %zu target logs, %zu test users -> %s/data\n",
              task.source_logs.size(), task.target_logs.size(),
              task.test_labels.size(), out.c_str());
  return 0;
}

int cmd_build_vocab(const json& cfg) {
  const std::string out = cfg.at("out").get<std::string>();
  Corpus corpus = load_corpus(data_dir(cfg), false);
  std::vector<std::vector<std::string>> documents;
  for (const Catalog* cat : {&corpus.source_catalog, &corpus.target_catalog})
    for (const auto& item : cat->items) documents.push_back(item_tokens(item));
  Vocabulary vocab = build_vocabulary(documents, integer(cfg, "vocab.capacity", 8000));
  fs::create_directories(out + "/vocab");
  save_vocabulary(vocab, out + "/vocab/vocab.tsv");
  write_manifest(out + "/vocab");
  echo_config(cfg, out, "build-vocab");
  std::printf("build-vocab: %d terms from %lld documents -> %s/vocab/vocab.tsv\n",
              vocab.size(), static_cast<long long>(vocab.total_docs), out.c_str());
  return 0;
}

int cmd_train_sdae(const json& cfg) {
  const std::string out = cfg.at("out").get<std::string>();
  Corpus corpus = load_corpus(data_dir(cfg), false);
  Vocabulary vocab = load_vocabulary(vocab_path(cfg));
  ItemFeatConfig fc = item_feat_config(corpus.source_catalog);
  auto items = item_feature_rows(corpus.source_catalog, vocab, fc);

  SdaeTrainConfig tc;
  tc.epochs = integer(cfg, "sdae.epochs", tc.epochs);
  tc.batch_size = integer(cfg, "sdae.batch_size", tc.batch_size);
  tc.lr = num(cfg, "sdae.lr", tc.lr);
  tc.seed = cfg.at("seed").get<std::uint64_t>();
  auto res = train_sdae(items, sdae_config(cfg), tc);

  fs::create_directories(out + "/models");
  fs::create_directories(out + "/reports");
  save_sdae_model(res.model, out + "/models/sdae.model");
  std::ofstream trace(out + "/reports/sdae_loss.tsv");
  trace << "epoch\tmean_loss\n";
  char buf[64];
  for (std::size_t e = 0; e < res.epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\n", e, res.epoch_loss[e]);
    trace << buf;
  }
  trace.close();
  write_manifest(out + "/models");
  write_manifest(out + "/reports");
  echo_config(cfg, out, "train-sdae");
  std::printf("train-sdae: final epoch loss %.6f -> %s/models/sdae.model\n",
              res.epoch_loss.empty() ? 0.0 : res.epoch_loss.back(), out.c_str());
  return 0;
}

void write_trace(const std::vector<CheckpointMetrics>& trace, const std::string& path) {
  std::ofstream f(path);
  f << "step\tepoch\tweight_decay\tce\tndcg100\n";
  char buf[160];
  for (const auto& m : trace) {
    std::snprintf(buf, sizeof buf, "%ld\t%d\t%.17g\t%.17g\t%.17g\n", m.step, m.epoch,
                  m.weight_decay, m.ce, m.ndcg100);
    f << buf;
  }
}

int cmd_train(const json& cfg) {
  const std::string out = cfg.at("out").get<std::string>();
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  Corpus corpus = load_corpus(data_dir(cfg), false);
  Vocabulary vocab = load_vocabulary(vocab_path(cfg));
  Prepared p = prepare(corpus, vocab, false);

  const std::string method = str(cfg, "method", "I-DSN");
  TrainConfig tc = train_config(cfg, seed);
  tc.loss_weights = method_weights(tc.loss_weights, method);

  fs::create_directories(out + "/checkpoints");
  fs::create_directories(out + "/models");
  fs::create_directories(out + "/reports");
  TrainResult res = train(p.source, p.target, p.item_features,
                          dsn_dims(cfg, p.input_dim, p.num_labels), sdae_config(cfg),
                          tc, out + "/checkpoints");

  save_dsn_model(res.best_ce.model, out + "/models/dsn_best_ce.model");
  save_dsn_model(res.best_ndcg.model, out + "/models/dsn_best_ndcg.model");
  if (res.best().has_sdae)
    save_sdae_model(res.best().sdae, out + "/models/sdae_joint.model");
  write_trace(res.trace, out + "/reports/train_trace.tsv");
  write_manifest(out + "/checkpoints");
  write_manifest(out + "/models");
  write_manifest(out + "/reports");
  echo_config(cfg, out, "train");

  const auto& best = res.best().metrics;
  std::printf("train[%s]: best step %ld (epoch %d, wd %g) ce %.5f ndcg100 %.5f\n",
              method.c_str(), best.step, best.epoch, best.weight_decay, best.ce,
              best.ndcg100);
  return 0;
}

EvalReport run_eval_job(const std::string& method, std::uint64_t seed, const json& cfg,
                        const Prepared& p, const std::vector<int>& ks, int max_k) {
  if (method == "POP") {
    std::vector<int> order = popularity_baseline(p.source.labels, p.num_labels);
    order.resize(static_cast<std::size_t>(std::min<int>(max_k, p.num_labels)));
    std::vector<std::vector<int>> ranked(p.test.size(), order);
    return evaluate_rankings(ranked, p.test.labels, ks, method, seed);
  }
  TrainConfig tc = train_config(cfg, seed);
  tc.loss_weights = method_weights(tc.loss_weights, method);
  TrainResult res = train(p.source, p.target, p.item_features,
                          dsn_dims(cfg, p.input_dim, p.num_labels), sdae_config(cfg), tc);
  auto ranked = rank_dataset(res.best().model, p.test, max_k);
  return evaluate_rankings(ranked, p.test.labels, ks, method, seed);
}

int cmd_evaluate(const json& cfg) {
  const std::string out = cfg.at("out").get<std::string>();
  Corpus corpus = load_corpus(data_dir(cfg), true);
  Vocabulary vocab = load_vocabulary(vocab_path(cfg));
  Prepared p = prepare(corpus, vocab, true);

  std::vector<std::string> methods =
      list<std::string>(cfg, "eval.methods", {"I-DSN", "DSN", "NN", "POP"});
  std::vector<std::uint64_t> seeds = list<std::uint64_t>(
      cfg, "eval.seeds", {cfg.at("seed").get<std::uint64_t>()});
  std::vector<int> ks = list<int>(cfg, "eval.ks", {1, 5, 10, 50, 100});
  const int max_k = *std::max_element(ks.begin(), ks.end());

  struct Job {
    std::string method;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& m : methods)
    for (std::uint64_t s : seeds) jobs.push_back({m, s});

  // Independent (method, seed) runs fan out across workers; a single
  // writer emits the reports in job order afterwards.
  int workers = integer(cfg, "eval.threads",
                        static_cast<int>(std::thread::hardware_concurrency()));
  workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  std::vector<EvalReport> reports(jobs.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(jobs.size());
  auto work = [&]() {
    for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
      try {
        reports[i] = run_eval_job(jobs[i].method, jobs[i].seed, cfg, p, ks, max_k);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (!errors[i].empty())
      throw std::runtime_error(jobs[i].method + " seed " +
                               std::to_string(jobs[i].seed) + ": " + errors[i]);

  fs::create_directories(out + "/reports");
  std::ofstream table(out + "/reports/summary.tsv");
  table << "method\tK\tmetric\tvalue\tseed\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string name = out + "/reports/" + jobs[i].method + "_seed" +
                             std::to_string(jobs[i].seed) + ".tsv";
    save_report(reports[i], name);
    table << report_table_rows(reports[i]);
  }
  table.close();
  write_manifest(out + "/reports");
  echo_config(cfg, out, "evaluate");
  for (std::size_t i = 0; i < jobs.size(); ++i)
    std::printf("evaluate[%s seed %llu]: ndcg@100 %.5f recall@100 %.5f\n",
                jobs[i].method.c_str(),
                static_cast<unsigned long long>(jobs[i].seed),
                reports[i].ndcg.count(100) ? reports[i].ndcg.at(100) : 0.0,
                reports[i].recall.count(100) ? reports[i].recall.at(100) : 0.0);
  return 0;
}

int cmd_recommend(const json& cfg) {
  const std::string out = cfg.at("out").get<std::string>();
  const std::string user = str(cfg, "recommend.user", "");
  if (user.empty()) throw std::runtime_error("recommend.user must name a target user");
  const std::string model_path =
      str(cfg, "recommend.model", out + "/models/dsn_best_ndcg.model");
  DsnModel model = load_dsn_model(model_path);
  Vocabulary vocab = load_vocabulary(vocab_path(cfg));
  Corpus corpus = load_corpus(data_dir(cfg), true);

  std::vector<LogEntry> logs = corpus.target_logs;
  logs.insert(logs.end(), corpus.test_logs.begin(), corpus.test_logs.end());
  auto histories = histories_from_logs(logs, "target");
  const UserHistory* hist = nullptr;
  for (const auto& h : histories)
    if (h.user_id == user) hist = &h;
  if (!hist) throw std::runtime_error("no target history for user " + user);

  SparseVec features =
      vectorize_text(history_tokens(*hist, corpus.target_catalog), vocab);
  const int L = model.dims.num_labels;
  int k = integer(cfg, "recommend.k", 10);
  const bool clamped = k > L;
  if (clamped) k = L;
  auto top = recommend_topk(model, features, k);

  fs::create_directories(out + "/reports");
  std::ofstream f(out + "/reports/recommend_" + user + ".tsv");
  f << "rank\titem_id\tscore\n";
  char buf[160];
  for (std::size_t r = 0; r < top.size(); ++r) {
    const std::string& id =
        corpus.source_catalog.items[static_cast<std::size_t>(top[r].first)].item_id;
    std::snprintf(buf, sizeof buf, "%zu\t%s\t%.17g\n", r + 1, id.c_str(),
                  top[r].second);
    f << buf;
    std::printf("%zu\t%s\t%.6f\n", r + 1, id.c_str(), top[r].second);
  }
  f.close();
  write_manifest(out + "/reports");
  echo_config(cfg, out, "recommend");
  if (clamped) std::printf("note: K exceeded catalog size, returned all %d items\n", L);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-domain recommender pipeline"};
  app.require_subcommand(1);

  const std::vector<std::string> verbs = {"synth-gen", "build-vocab", "train-sdae",
                                          "train", "evaluate", "recommend",
                                          "gradcheck"};
  std::map<std::string, CommonArgs> args;
  for (const std::string& verb : verbs) {
    auto* sub = app.add_subcommand(verb);
    CommonArgs& a = args[verb];
    sub->add_option("--config", a.config_path, "flat JSON config file");
    sub->add_option("--seed", a.seed, "run seed")->each([&a](const std::string&) {
      a.seed_given = true;
    });
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("overrides", a.overrides, "key=value config overrides");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    if (verb == "gradcheck") return run_gradcheck_suite(true) ? 0 : 1;
    json cfg = load_config(args[verb]);
    if (verb == "synth-gen") return cmd_synth_gen(cfg);
    if (verb == "build-vocab") return cmd_build_vocab(cfg);
    if (verb == "train-sdae") return cmd_train_sdae(cfg);
    if (verb == "train") return cmd_train(cfg);
    if (verb == "evaluate") return cmd_evaluate(cfg);
    if (verb == "recommend") return cmd_recommend(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
