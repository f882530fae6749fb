#include "crossrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "crossrec/io.hpp"

namespace crossrec {

void SynthConfig::validate() const {
  if (num_items < 1 || num_target_items < 1 || num_topics < 1 || vocab_source < 1 ||
      vocab_target < 1 || n_source < 1 || n_target < 1 || n_test < 1)
    throw std::invalid_argument("synth config: counts must be >= 1");
  if (shift < 0.0 || shift > 1.0)
    throw std::invalid_argument("synth config: shift must be in [0,1]");
  if (history_min < 1 || history_max < history_min)
    throw std::invalid_argument("synth config: bad history length range");
  if (history_max + 1 > num_items || history_max > num_target_items)
    throw std::invalid_argument("synth config: histories longer than catalog");
}

namespace {

std::vector<double> dirichlet(int dim, double conc, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double total = 0.0;
  for (double& x : v) {
    x = std::max(rng.gamma(conc), 1e-300);
    total += x;
  }
  for (double& x : v) x /= total;
  return v;
}

int categorical(const std::vector<double>& weights, double total, Rng& rng) {
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

// Draws `count` distinct indices by iterated categorical sampling.
std::vector<int> sample_without_replacement(std::vector<double> weights, int count,
                                            Rng& rng) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int k = categorical(weights, total, rng);
    out.push_back(k);
    total -= weights[static_cast<std::size_t>(k)];
    weights[static_cast<std::size_t>(k)] = 0.0;
  }
  return out;
}

std::string word(const char* prefix, int idx) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%s%d", prefix, idx);
  return buf;
}

std::string padded_id(const char* prefix, int idx) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%s%05d", prefix, idx);
  return buf;
}

struct TopicModel {
  std::vector<std::vector<double>> topic_words;  // T x V
  const char* word_prefix;
};

ItemRecord make_item(const std::string& id, const std::vector<double>& topics,
                     const TopicModel& tm, Rng& rng) {
  ItemRecord item;
  item.item_id = id;
  const int n_tokens = 20 + static_cast<int>(rng.below(41));
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(n_tokens));
  for (int i = 0; i < n_tokens; ++i) {
    const int t = categorical(topics, 1.0, rng);
    const auto& dist = tm.topic_words[static_cast<std::size_t>(t)];
    tokens.push_back(word(tm.word_prefix, categorical(dist, 1.0, rng)));
  }
  auto join = [&](std::size_t from, std::size_t to) {
    std::string s;
    for (std::size_t i = from; i < to && i < tokens.size(); ++i) {
      if (!s.empty()) s += ' ';
      s += tokens[i];
    }
    return s;
  };
  item.title = join(0, 4);
  item.cast = join(4, 6);
  item.description = join(6, tokens.size());

  const int cat = static_cast<int>(std::max_element(topics.begin(), topics.end()) -
                                   topics.begin());
  item.category = word("cat", cat);
  // Category-correlated playtime; stays well under the 100h bound.
  item.playtime_seconds = static_cast<std::int64_t>(cat) * 607 +
                          static_cast<std::int64_t>(rng.below(3600));
  return item;
}

std::vector<double> preference_weights(const std::vector<double>& prefs,
                                       const std::vector<std::vector<double>>& item_topics,
                                       double temp) {
  std::vector<double> w(item_topics.size());
  for (std::size_t k = 0; k < item_topics.size(); ++k) {
    double dot = 0.0;
    for (std::size_t t = 0; t < prefs.size(); ++t) dot += prefs[t] * item_topics[k][t];
    w[k] = std::exp(temp * dot);
  }
  return w;
}

SynthTask generate_once(const SynthConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  SynthTask task;
  const int T = cfg.num_topics;

  TopicModel src_tm{{}, "w"};
  TopicModel tgt_tm{{}, "v"};
  for (int t = 0; t < T; ++t) {
    src_tm.topic_words.push_back(dirichlet(cfg.vocab_source, cfg.word_concentration, rng));
    tgt_tm.topic_words.push_back(dirichlet(cfg.vocab_target, cfg.word_concentration, rng));
  }

  // Fixed topic permutation used for the shifted target preferences.
  std::vector<int> perm(static_cast<std::size_t>(T));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());

  for (int k = 0; k < cfg.num_items; ++k) {
    task.item_topics.push_back(dirichlet(T, cfg.topic_concentration, rng));
    task.source_catalog.items.push_back(
        make_item(padded_id("s", k), task.item_topics.back(), src_tm, rng));
  }
  task.source_catalog.rebuild_index();

  std::vector<std::vector<double>> tgt_item_topics;
  for (int k = 0; k < cfg.num_target_items; ++k) {
    tgt_item_topics.push_back(dirichlet(T, cfg.topic_concentration, rng));
    task.target_catalog.items.push_back(
        make_item(padded_id("t", k), tgt_item_topics.back(), tgt_tm, rng));
  }
  task.target_catalog.rebuild_index();

  auto shifted = [&](const std::vector<double>& p) {
    std::vector<double> q(p.size());
    for (std::size_t t = 0; t < p.size(); ++t)
      q[t] = (1.0 - cfg.shift) * p[t] + cfg.shift * p[static_cast<std::size_t>(perm[t])];
    return q;
  };

  auto emit_history = [&](const std::string& user, const std::string& domain,
                          const Catalog& catalog, const std::vector<int>& items,
                          std::vector<LogEntry>& logs) {
    for (std::size_t i = 0; i < items.size(); ++i)
      logs.push_back({user, static_cast<std::int64_t>(i),
                      catalog.items[static_cast<std::size_t>(items[i])].item_id, domain});
  };

  // Labeled source users: history plus one held-out next item (last event).
  for (int u = 0; u < cfg.n_source; ++u) {
    auto prefs = dirichlet(T, cfg.user_concentration, rng);
    auto w = preference_weights(prefs, task.item_topics, cfg.preference_temp);
    const int len =
        cfg.history_min + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(cfg.history_max - cfg.history_min + 1)));
    auto items = sample_without_replacement(w, len + 1, rng);
    emit_history(padded_id("su", u), "source", task.source_catalog, items,
                 task.source_logs);
  }

  // Unlabeled target users with shifted topic mixtures.
  for (int u = 0; u < cfg.n_target; ++u) {
    auto prefs = shifted(dirichlet(T, cfg.user_concentration, rng));
    auto w = preference_weights(prefs, tgt_item_topics, cfg.preference_temp);
    const int len =
        cfg.history_min + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(cfg.history_max - cfg.history_min + 1)));
    auto items = sample_without_replacement(w, len, rng);
    emit_history(padded_id("tu", u), "target", task.target_catalog, items,
                 task.target_logs);
  }

  // Common users: target history, source-item label from the same prefs.
  for (int u = 0; u < cfg.n_test; ++u) {
    auto prefs = dirichlet(T, cfg.user_concentration, rng);
    task.test_user_prefs.push_back(prefs);
    auto wq = preference_weights(shifted(prefs), tgt_item_topics, cfg.preference_temp);
    const int len =
        cfg.history_min + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(cfg.history_max - cfg.history_min + 1)));
    auto items = sample_without_replacement(wq, len, rng);
    const std::string user = padded_id("cu", u);
    emit_history(user, "target", task.target_catalog, items, task.test_logs);

    auto wp = preference_weights(prefs, task.item_topics, cfg.preference_temp);
    const double total = std::accumulate(wp.begin(), wp.end(), 0.0);
    task.test_labels[user] =
        task.source_catalog.items[static_cast<std::size_t>(categorical(wp, total, rng))]
            .item_id;
  }
  return task;
}

bool label_marginal_ok(const SynthTask& task, const SynthConfig& cfg) {
  std::map<std::string, int> counts;
  std::map<std::string, std::string> last_per_user;
  for (const auto& e : task.source_logs) last_per_user[e.user_id] = e.item_id;
  for (const auto& [user, item] : last_per_user) ++counts[item];
  int max_count = 0;
  for (const auto& [item, c] : counts) max_count = std::max(max_count, c);
  return max_count <= cfg.n_source / 5;
}

}  // namespace

SynthTask generate(const SynthConfig& config) {
  config.validate();
  // Redraw with a bumped seed if the label marginal is degenerate.
  for (int attempt = 0; attempt < 16; ++attempt) {
    SynthTask task = generate_once(config, config.seed + static_cast<std::uint64_t>(attempt));
    if (label_marginal_ok(task, config)) return task;
  }
  throw std::runtime_error("synth: could not draw a non-degenerate label marginal");
}

void save_task(const SynthTask& task, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_catalog(task.source_catalog, (fs::path(dir) / "catalog_source.tsv").string());
  save_catalog(task.target_catalog, (fs::path(dir) / "catalog_target.tsv").string());
  save_logs(task.source_logs, (fs::path(dir) / "source_logs.tsv").string());
  save_logs(task.target_logs, (fs::path(dir) / "target_logs.tsv").string());
  save_logs(task.test_logs, (fs::path(dir) / "test_logs.tsv").string());
  save_test_labels(task.test_labels, (fs::path(dir) / "test_labels.tsv").string());
  write_manifest(dir);
}

}  // namespace crossrec
