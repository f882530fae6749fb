#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crossrec/nn.hpp"

namespace crossrec {

// Top-K item indices by descending score, ties broken by ascending id.
// K >= catalog size returns the full permutation.
std::vector<int> rank_topk(const Vector& scores, int k);

double recall_at_k(const std::vector<std::vector<int>>& ranked_lists,
                   const std::vector<int>& labels, int k);

// Single-relevance nDCG: a hit at rank r contributes 1/log2(r+1).
double ndcg_at_k(const std::vector<std::vector<int>>& ranked_lists,
                 const std::vector<int>& labels, int k);

// Top-1 error rate; identically 1 - recall@1.
double empirical_target_risk(const std::vector<std::vector<int>>& ranked_lists,
                             const std::vector<int>& labels);

// Items sorted by descending training frequency, ties by ascending id.
std::vector<int> popularity_baseline(const std::vector<int>& train_labels,
                                     int num_items);

struct EvalReport {
  std::string method;  // I-DSN | DSN | NN | POP
  std::uint64_t seed = 0;
  int n_test = 0;
  std::map<int, double> recall;  // K -> value
  std::map<int, double> ndcg;
  double target_risk = 0.0;
};

// Metrics at each K in `ks` for full-catalog ranked lists.
EvalReport evaluate_rankings(const std::vector<std::vector<int>>& ranked_lists,
                             const std::vector<int>& labels,
                             const std::vector<int>& ks, const std::string& method,
                             std::uint64_t seed);

// Structured report (one file) plus appendable flat rows
// (method \t K \t metric \t value \t seed).
void save_report(const EvalReport& report, const std::string& path);
std::string report_table_rows(const EvalReport& report);

}  // namespace crossrec
