#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crossrec/featurize.hpp"
#include "crossrec/rng.hpp"

namespace crossrec {

// Paired-domain topic-model generator. Source and target users share the
// same preference law; the target topic mixture is blended with a fixed
// topic permutation, so `shift` dials domain shift while preserving the
// label structure.
struct SynthConfig {
  int num_items = 200;         // source catalog size L (= label count)
  int num_target_items = 200;
  int num_topics = 12;
  int vocab_source = 1000;
  int vocab_target = 1000;
  int n_source = 20000;  // labeled source users
  int n_target = 20000;  // unlabeled target users
  int n_test = 2000;     // common users: target history + source label
  int history_min = 3;
  int history_max = 10;
  double shift = 0.6;  // s in [0,1]
  double topic_concentration = 0.3;
  double user_concentration = 0.3;
  double word_concentration = 0.1;
  double preference_temp = 5.0;  // c in exp(c * <p_u, psi_k>)
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthTask {
  Catalog source_catalog;
  Catalog target_catalog;
  std::vector<LogEntry> source_logs;
  std::vector<LogEntry> target_logs;
  std::vector<LogEntry> test_logs;  // target-domain histories of common users
  std::map<std::string, std::string> test_labels;

  // Generator-internal quantities kept for property tests (not serialized).
  std::vector<std::vector<double>> item_topics;      // psi_k per source item
  std::vector<std::vector<double>> test_user_prefs;  // p_u per test user
};

SynthTask generate(const SynthConfig& config);

// Writes the catalog/log/label files consumed by the feature pipeline,
// plus a content-hash manifest.
void save_task(const SynthTask& task, const std::string& dir);

}  // namespace crossrec
