#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crossrec/sparse.hpp"

namespace crossrec {

// TF-IDF vocabulary. Terms are ranked by the sum of tf-idf over all
// documents (ties broken lexicographically) and the top `capacity` kept.
// idf(t) = ln((1+N)/(1+df)) + 1.
struct Vocabulary {
  std::map<std::string, int> term_to_index;
  std::vector<std::string> terms;      // index -> term
  std::vector<std::int64_t> doc_freq;  // index -> df
  std::int64_t total_docs = 0;
  int capacity = 0;

  int size() const { return static_cast<int>(terms.size()); }
  double idf(int index) const;
};

struct ItemRecord {
  std::string item_id;
  std::string title;
  std::string category;
  std::string description;
  std::string cast;
  std::int64_t playtime_seconds = 0;
};

struct UserHistory {
  std::string user_id;
  std::vector<std::pair<std::int64_t, std::string>> events;  // (timestamp, item_id)
  std::string domain;  // "source" | "target"
};

struct LogEntry {
  std::string user_id;
  std::int64_t timestamp = 0;
  std::string item_id;
  std::string domain;
};

struct Catalog {
  std::vector<ItemRecord> items;
  std::map<std::string, int> id_to_index;

  int index_of(const std::string& id) const;
  void rebuild_index();
};

// Lowercases and splits on anything that is not alphanumeric.
std::vector<std::string> tokenize(const std::string& text);

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& documents,
                            int capacity);

// tf * idf over in-vocab terms, L2-normalized. OOV tokens dropped.
SparseVec vectorize_text(const std::vector<std::string>& tokens,
                         const Vocabulary& vocab);

struct ItemFeatConfig {
  std::vector<std::string> categories;  // one-hot order; unknown -> zero block
  int hour_buckets = 24;
};

// [ TF-IDF text | category one-hot | hour | minute | second ].
SparseVec vectorize_item(const ItemRecord& item, const Vocabulary& text_vocab,
                         const ItemFeatConfig& cfg);

int item_feature_dim(const Vocabulary& text_vocab, const ItemFeatConfig& cfg);

// All text fields of an item, tokenized.
std::vector<std::string> item_tokens(const ItemRecord& item);

// A user history as a document: concatenated text of every history item.
std::vector<std::string> history_tokens(const UserHistory& history,
                                        const Catalog& catalog);

// ---- Supervised example assembly -----------------------------------------

struct Dataset {
  std::vector<SparseVec> features;
  std::vector<int> labels;  // empty when unlabeled
  std::vector<std::string> user_ids;

  std::size_t size() const { return features.size(); }
  bool labeled() const { return !labels.empty(); }
};

// Source histories: last event is the held-out next item (the label),
// the rest form the input document. Histories shorter than 2 are skipped.
Dataset build_source_examples(const std::vector<UserHistory>& histories,
                              const Catalog& source_catalog,
                              const Vocabulary& user_vocab);

// Full history as input, no labels.
Dataset build_target_examples(const std::vector<UserHistory>& histories,
                              const Catalog& target_catalog,
                              const Vocabulary& user_vocab);

// Target histories paired with source-item labels.
Dataset build_test_examples(const std::vector<UserHistory>& histories,
                            const Catalog& target_catalog,
                            const Catalog& source_catalog,
                            const std::map<std::string, std::string>& labels,
                            const Vocabulary& user_vocab);

// ---- File formats --------------------------------------------------------

// Catalog: item_id \t title \t category \t description \t cast \t playtime.
Catalog load_catalog(const std::string& path);
void save_catalog(const Catalog& catalog, const std::string& path);

// Logs: user_id \t timestamp \t item_id \t domain.
std::vector<LogEntry> load_logs(const std::string& path);
void save_logs(const std::vector<LogEntry>& logs, const std::string& path);

// Groups one domain's log lines into per-user histories (users sorted by
// id, events by timestamp).
std::vector<UserHistory> histories_from_logs(const std::vector<LogEntry>& logs,
                                             const std::string& domain);

// Vocabulary file: term \t index \t df, preceded by a header line.
void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);

// Test labels: user_id \t item_id.
std::map<std::string, std::string> load_test_labels(const std::string& path);
void save_test_labels(const std::map<std::string, std::string>& labels,
                      const std::string& path);

}  // namespace crossrec
