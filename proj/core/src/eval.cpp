#include "crossrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace crossrec {

std::vector<int> rank_topk(const Vector& scores, int k) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  const int kk = std::min(k, n);
  auto cmp = [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(), cmp);
  idx.resize(static_cast<std::size_t>(kk));
  return idx;
}

static void check_inputs(const std::vector<std::vector<int>>& ranked,
                         const std::vector<int>& labels, int k) {
  if (k < 1) throw std::invalid_argument("metrics: K must be >= 1");
  if (ranked.size() != labels.size())
    throw std::invalid_argument("metrics: list/label count mismatch");
}

double recall_at_k(const std::vector<std::vector<int>>& ranked_lists,
                   const std::vector<int>& labels, int k) {
  check_inputs(ranked_lists, labels, k);
  if (ranked_lists.empty()) return 0.0;
  double hits = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& list = ranked_lists[i];
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), list.size());
    for (std::size_t r = 0; r < top; ++r)
      if (list[r] == labels[i]) {
        hits += 1.0;
        break;
      }
  }
  return hits / static_cast<double>(labels.size());
}

double ndcg_at_k(const std::vector<std::vector<int>>& ranked_lists,
                 const std::vector<int>& labels, int k) {
  check_inputs(ranked_lists, labels, k);
  if (ranked_lists.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& list = ranked_lists[i];
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), list.size());
    for (std::size_t r = 0; r < top; ++r)
      if (list[r] == labels[i]) {
        sum += 1.0 / std::log2(static_cast<double>(r) + 2.0);
        break;
      }
  }
  return sum / static_cast<double>(labels.size());
}

double empirical_target_risk(const std::vector<std::vector<int>>& ranked_lists,
                             const std::vector<int>& labels) {
  return 1.0 - recall_at_k(ranked_lists, labels, 1);
}

std::vector<int> popularity_baseline(const std::vector<int>& train_labels,
                                     int num_items) {
  if (train_labels.empty())
    throw std::invalid_argument("popularity_baseline: no label observations");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_items), 0);
  for (int y : train_labels) {
    if (y < 0 || y >= num_items)
      throw std::out_of_range("popularity_baseline: label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  std::vector<int> idx(static_cast<std::size_t>(num_items));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (counts[static_cast<std::size_t>(a)] != counts[static_cast<std::size_t>(b)])
      return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    return a < b;
  });
  return idx;
}

EvalReport evaluate_rankings(const std::vector<std::vector<int>>& ranked_lists,
                             const std::vector<int>& labels,
                             const std::vector<int>& ks, const std::string& method,
                             std::uint64_t seed) {
  EvalReport report;
  report.method = method;
  report.seed = seed;
  report.n_test = static_cast<int>(labels.size());
  for (int k : ks) {
    report.recall[k] = recall_at_k(ranked_lists, labels, k);
    report.ndcg[k] = ndcg_at_k(ranked_lists, labels, k);
  }
  report.target_risk = empirical_target_risk(ranked_lists, labels);
  return report;
}

static std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_report(const EvalReport& report, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "method\t" << report.method << '\n';
  f << "seed\t" << report.seed << '\n';
  f << "n_test\t" << report.n_test << '\n';
  for (const auto& [k, v] : report.recall) f << "recall@" << k << '\t' << fmt(v) << '\n';
  for (const auto& [k, v] : report.ndcg) f << "ndcg@" << k << '\t' << fmt(v) << '\n';
  f << "target_risk\t" << fmt(report.target_risk) << '\n';
}

std::string report_table_rows(const EvalReport& report) {
  std::ostringstream out;
  for (const auto& [k, v] : report.recall)
    out << report.method << '\t' << k << "\trecall\t" << fmt(v) << '\t' << report.seed << '\n';
  for (const auto& [k, v] : report.ndcg)
    out << report.method << '\t' << k << "\tndcg\t" << fmt(v) << '\t' << report.seed << '\n';
  out << report.method << "\t1\ttarget_risk\t" << fmt(report.target_risk) << '\t'
      << report.seed << '\n';
  return out.str();
}

}  // namespace crossrec
