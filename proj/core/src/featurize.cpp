#include "crossrec/featurize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crossrec {

double Vocabulary::idf(int index) const {
  return std::log((1.0 + static_cast<double>(total_docs)) /
                  (1.0 + static_cast<double>(doc_freq[index]))) +
         1.0;
}

int Catalog::index_of(const std::string& id) const {
  auto it = id_to_index.find(id);
  if (it == id_to_index.end())
    throw std::out_of_range("catalog: unknown item id " + id);
  return it->second;
}

void Catalog::rebuild_index() {
  id_to_index.clear();
  for (int i = 0; i < static_cast<int>(items.size()); ++i)
    id_to_index[items[i].item_id] = i;
  if (id_to_index.size() != items.size())
    throw std::invalid_argument("catalog: duplicate item ids");
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& documents,
                            int capacity) {
  if (capacity < 1) throw std::invalid_argument("vocabulary capacity must be >= 1");
  if (documents.empty()) throw std::invalid_argument("empty corpus");

  const std::int64_t n_docs = static_cast<std::int64_t>(documents.size());
  std::map<std::string, std::int64_t> df;
  std::map<std::string, std::int64_t> total_tf;
  for (const auto& doc : documents) {
    std::map<std::string, std::int64_t> tf;
    for (const auto& tok : doc) ++tf[tok];
    for (const auto& [term, count] : tf) {
      ++df[term];
      total_tf[term] += count;
    }
  }

  // score(term) = sum over docs of tf * idf = total_tf * idf
  std::vector<std::pair<double, std::string>> ranked;
  ranked.reserve(df.size());
  for (const auto& [term, d] : df) {
    const double idf =
        std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(d))) + 1.0;
    ranked.emplace_back(static_cast<double>(total_tf[term]) * idf, term);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (static_cast<int>(ranked.size()) > capacity) ranked.resize(capacity);

  Vocabulary vocab;
  vocab.capacity = capacity;
  vocab.total_docs = n_docs;
  for (const auto& [score, term] : ranked) {
    const int idx = vocab.size();
    vocab.term_to_index[term] = idx;
    vocab.terms.push_back(term);
    vocab.doc_freq.push_back(df[term]);
  }
  return vocab;
}

SparseVec vectorize_text(const std::vector<std::string>& tokens,
                         const Vocabulary& vocab) {
  std::map<int, double> tf;
  for (const auto& tok : tokens) {
    auto it = vocab.term_to_index.find(tok);
    if (it != vocab.term_to_index.end()) tf[it->second] += 1.0;
  }
  SparseVec v;
  v.dim = vocab.size();
  v.entries.reserve(tf.size());
  for (const auto& [idx, count] : tf)
    v.entries.emplace_back(idx, count * vocab.idf(idx));
  v.l2_normalize();
  return v;
}

std::vector<std::string> item_tokens(const ItemRecord& item) {
  std::vector<std::string> out = tokenize(item.title);
  for (const auto& part : {item.description, item.cast}) {
    auto toks = tokenize(part);
    out.insert(out.end(), toks.begin(), toks.end());
  }
  return out;
}

int item_feature_dim(const Vocabulary& text_vocab, const ItemFeatConfig& cfg) {
  return text_vocab.size() + static_cast<int>(cfg.categories.size()) +
         cfg.hour_buckets + 60 + 60;
}

SparseVec vectorize_item(const ItemRecord& item, const Vocabulary& text_vocab,
                         const ItemFeatConfig& cfg) {
  if (item.playtime_seconds < 0)
    throw std::invalid_argument("vectorize_item: negative playtime");
  SparseVec text = vectorize_text(item_tokens(item), text_vocab);

  SparseVec v;
  v.dim = item_feature_dim(text_vocab, cfg);
  v.entries = std::move(text.entries);

  int offset = text_vocab.size();
  auto cat_it = std::find(cfg.categories.begin(), cfg.categories.end(), item.category);
  if (cat_it != cfg.categories.end())
    v.entries.emplace_back(offset + static_cast<int>(cat_it - cfg.categories.begin()), 1.0);
  offset += static_cast<int>(cfg.categories.size());

  const std::int64_t hours = item.playtime_seconds / 3600;
  const int hour_idx = static_cast<int>(std::min<std::int64_t>(hours, cfg.hour_buckets - 1));
  const int minute_idx = static_cast<int>((item.playtime_seconds / 60) % 60);
  const int second_idx = static_cast<int>(item.playtime_seconds % 60);
  v.entries.emplace_back(offset + hour_idx, 1.0);
  offset += cfg.hour_buckets;
  v.entries.emplace_back(offset + minute_idx, 1.0);
  offset += 60;
  v.entries.emplace_back(offset + second_idx, 1.0);
  return v;
}

std::vector<std::string> history_tokens(const UserHistory& history,
                                        const Catalog& catalog) {
  std::vector<std::string> out;
  for (const auto& [ts, item_id] : history.events) {
    auto toks = item_tokens(catalog.items[catalog.index_of(item_id)]);
    out.insert(out.end(), toks.begin(), toks.end());
  }
  return out;
}

static std::vector<std::string> history_prefix_tokens(const UserHistory& h,
                                                      const Catalog& catalog,
                                                      std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count && i < h.events.size(); ++i) {
    auto toks = item_tokens(catalog.items[catalog.index_of(h.events[i].second)]);
    out.insert(out.end(), toks.begin(), toks.end());
  }
  return out;
}

Dataset build_source_examples(const std::vector<UserHistory>& histories,
                              const Catalog& source_catalog,
                              const Vocabulary& user_vocab) {
  Dataset ds;
  for (const auto& h : histories) {
    if (h.events.size() < 2) continue;
    auto toks = history_prefix_tokens(h, source_catalog, h.events.size() - 1);
    ds.features.push_back(vectorize_text(toks, user_vocab));
    ds.labels.push_back(source_catalog.index_of(h.events.back().second));
    ds.user_ids.push_back(h.user_id);
  }
  return ds;
}

Dataset build_target_examples(const std::vector<UserHistory>& histories,
                              const Catalog& target_catalog,
                              const Vocabulary& user_vocab) {
  Dataset ds;
  for (const auto& h : histories) {
    ds.features.push_back(vectorize_text(history_tokens(h, target_catalog), user_vocab));
    ds.user_ids.push_back(h.user_id);
  }
  return ds;
}

Dataset build_test_examples(const std::vector<UserHistory>& histories,
                            const Catalog& target_catalog,
                            const Catalog& source_catalog,
                            const std::map<std::string, std::string>& labels,
                            const Vocabulary& user_vocab) {
  Dataset ds;
  for (const auto& h : histories) {
    auto it = labels.find(h.user_id);
    if (it == labels.end()) continue;
    ds.features.push_back(vectorize_text(history_tokens(h, target_catalog), user_vocab));
    ds.labels.push_back(source_catalog.index_of(it->second));
    ds.user_ids.push_back(h.user_id);
  }
  return ds;
}

// ---- File IO -------------------------------------------------------------

static std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, '\t')) out.push_back(field);
  return out;
}

static std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

static std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return f;
}

Catalog load_catalog(const std::string& path) {
  Catalog catalog;
  auto f = open_in(path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 6)
      throw std::runtime_error("catalog: malformed line in " + path);
    ItemRecord rec;
    rec.item_id = fields[0];
    rec.title = fields[1];
    rec.category = fields[2];
    rec.description = fields[3];
    rec.cast = fields[4];
    rec.playtime_seconds = std::stoll(fields[5]);
    catalog.items.push_back(std::move(rec));
  }
  catalog.rebuild_index();
  return catalog;
}

void save_catalog(const Catalog& catalog, const std::string& path) {
  auto f = open_out(path);
  for (const auto& it : catalog.items)
    f << it.item_id << '\t' << it.title << '\t' << it.category << '\t'
      << it.description << '\t' << it.cast << '\t' << it.playtime_seconds << '\n';
}

std::vector<LogEntry> load_logs(const std::string& path) {
  std::vector<LogEntry> logs;
  auto f = open_in(path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw std::runtime_error("logs: malformed line in " + path);
    logs.push_back({fields[0], std::stoll(fields[1]), fields[2], fields[3]});
  }
  return logs;
}

void save_logs(const std::vector<LogEntry>& logs, const std::string& path) {
  auto f = open_out(path);
  for (const auto& e : logs)
    f << e.user_id << '\t' << e.timestamp << '\t' << e.item_id << '\t'
      << e.domain << '\n';
}

std::vector<UserHistory> histories_from_logs(const std::vector<LogEntry>& logs,
                                             const std::string& domain) {
  std::map<std::string, UserHistory> by_user;
  for (const auto& e : logs) {
    if (e.domain != domain) continue;
    UserHistory& h = by_user[e.user_id];
    h.user_id = e.user_id;
    h.domain = domain;
    h.events.emplace_back(e.timestamp, e.item_id);
  }
  std::vector<UserHistory> out;
  out.reserve(by_user.size());
  for (auto& [id, h] : by_user) {
    std::stable_sort(h.events.begin(), h.events.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    out.push_back(std::move(h));
  }
  return out;
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  auto f = open_out(path);
  f << "#vocab\t" << vocab.capacity << '\t' << vocab.total_docs << '\n';
  for (int i = 0; i < vocab.size(); ++i)
    f << vocab.terms[i] << '\t' << i << '\t' << vocab.doc_freq[i] << '\n';
}

Vocabulary load_vocabulary(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("vocab: empty file " + path);
  auto header = split_tabs(line);
  if (header.size() != 3 || header[0] != "#vocab")
    throw std::runtime_error("vocab: bad header in " + path);
  Vocabulary vocab;
  vocab.capacity = std::stoi(header[1]);
  vocab.total_docs = std::stoll(header[2]);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) throw std::runtime_error("vocab: malformed line");
    const int idx = std::stoi(fields[1]);
    if (idx != vocab.size()) throw std::runtime_error("vocab: indices not dense");
    vocab.term_to_index[fields[0]] = idx;
    vocab.terms.push_back(fields[0]);
    vocab.doc_freq.push_back(std::stoll(fields[2]));
  }
  return vocab;
}

std::map<std::string, std::string> load_test_labels(const std::string& path) {
  std::map<std::string, std::string> labels;
  auto f = open_in(path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2) throw std::runtime_error("test labels: malformed line");
    labels[fields[0]] = fields[1];
  }
  return labels;
}

void save_test_labels(const std::map<std::string, std::string>& labels,
                      const std::string& path) {
  auto f = open_out(path);
  for (const auto& [user, item] : labels) f << user << '\t' << item << '\n';
}

Matrix densify_rows(const std::vector<SparseVec>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), rows[0].dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].dim != rows[0].dim)
      throw std::invalid_argument("densify_rows: inconsistent dims");
    for (const auto& [i, w] : rows[r].entries) m(static_cast<Eigen::Index>(r), i) = w;
  }
  return m;
}

}  // namespace crossrec
