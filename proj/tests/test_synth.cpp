#include <doctest.h>

#include <filesystem>
#include <set>

#include "crossrec/eval.hpp"
#include "crossrec/io.hpp"
#include "crossrec/synth.hpp"

using namespace crossrec;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.num_items = 40;
  cfg.num_target_items = 40;
  cfg.num_topics = 6;
  cfg.vocab_source = 200;
  cfg.vocab_target = 200;
  cfg.n_source = 300;
  cfg.n_target = 200;
  cfg.n_test = 100;
  cfg.history_min = 3;
  cfg.history_max = 6;
  cfg.shift = 0.5;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("dataset sizes match the config") {
  SynthConfig cfg = small_config();
  SynthTask task = generate(cfg);

  std::set<std::string> src_users, tgt_users, test_users;
  for (const auto& e : task.source_logs) src_users.insert(e.user_id);
  for (const auto& e : task.target_logs) tgt_users.insert(e.user_id);
  for (const auto& e : task.test_logs) test_users.insert(e.user_id);
  CHECK(static_cast<int>(src_users.size()) == cfg.n_source);
  CHECK(static_cast<int>(tgt_users.size()) == cfg.n_target);
  CHECK(static_cast<int>(test_users.size()) == cfg.n_test);
  CHECK(static_cast<int>(task.test_labels.size()) == cfg.n_test);
  CHECK(static_cast<int>(task.source_catalog.items.size()) == cfg.num_items);

  // every test label resolves in the source catalog
  for (const auto& [user, item] : task.test_labels)
    CHECK_NOTHROW(task.source_catalog.index_of(item));

  // history lengths respect the configured range (+1 held-out source item)
  std::map<std::string, int> lens;
  for (const auto& e : task.source_logs) ++lens[e.user_id];
  for (const auto& [u, n] : lens) {
    CHECK(n >= cfg.history_min + 1);
    CHECK(n <= cfg.history_max + 1);
  }
}

TEST_CASE("same seed gives byte-identical outputs") {
  namespace fs = std::filesystem;
  SynthConfig cfg = small_config();
  const auto d1 = fs::temp_directory_path() / "crossrec_synth_a";
  const auto d2 = fs::temp_directory_path() / "crossrec_synth_b";
  save_task(generate(cfg), d1.string());
  save_task(generate(cfg), d2.string());
  for (const char* name :
       {"catalog_source.tsv", "catalog_target.tsv", "source_logs.tsv",
        "target_logs.tsv", "test_logs.tsv", "test_labels.tsv", "MANIFEST.txt"})
    CHECK(file_hash_hex((d1 / name).string()) == file_hash_hex((d2 / name).string()));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("label marginal is non-degenerate") {
  SynthTask task = generate(small_config());
  std::map<std::string, std::string> last;
  for (const auto& e : task.source_logs) last[e.user_id] = e.item_id;
  std::map<std::string, int> counts;
  for (const auto& [u, item] : last) ++counts[item];
  for (const auto& [item, c] : counts)
    CHECK(c <= static_cast<int>(last.size()) / 5);
}

TEST_CASE("oracle preferences beat uniform recall@1") {
  SynthConfig cfg = small_config();
  SynthTask task = generate(cfg);

  // cheat classifier: rank source items by <p_u, psi_k>
  std::vector<std::vector<int>> ranked;
  std::vector<int> labels;
  int u = 0;
  for (const auto& [user, item] : task.test_labels) {
    const auto& prefs = task.test_user_prefs[static_cast<std::size_t>(u++)];
    Vector scores(cfg.num_items);
    for (int k = 0; k < cfg.num_items; ++k) {
      double dot = 0.0;
      for (int t = 0; t < cfg.num_topics; ++t)
        dot += prefs[static_cast<std::size_t>(t)] *
               task.item_topics[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
      scores[k] = dot;
    }
    ranked.push_back(rank_topk(scores, cfg.num_items));
    labels.push_back(task.source_catalog.index_of(item));
  }
  // test_labels iterates users in sorted order; prefs were stored in
  // generation order cu00000, cu00001, ... which is the same order.
  const double uniform = 1.0 / static_cast<double>(cfg.num_items);
  CHECK(recall_at_k(ranked, labels, 1) > 2.0 * uniform);
}

TEST_CASE("config validation") {
  SynthConfig cfg = small_config();
  cfg.shift = 1.5;
  CHECK_THROWS(generate(cfg));
  cfg = small_config();
  cfg.history_max = cfg.num_items;  // cannot draw len+1 distinct items
  CHECK_THROWS(generate(cfg));
  cfg = small_config();
  cfg.n_test = 0;
  CHECK_THROWS(generate(cfg));
}

TEST_CASE("zero shift keeps source and target preference laws equal") {
  SynthConfig cfg = small_config();
  cfg.shift = 0.0;
  SynthTask task = generate(cfg);  // q_u == p_u by construction
  CHECK(static_cast<int>(task.test_labels.size()) == cfg.n_test);
}
