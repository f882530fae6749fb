#include <doctest.h>

#include <cmath>

#include "crossrec/eval.hpp"
#include "crossrec/rng.hpp"

using namespace crossrec;

namespace {

// Independent brute-force oracles, deliberately written differently from
// the library implementations.
double brute_recall(const std::vector<std::vector<int>>& lists,
                    const std::vector<int>& labels, int k) {
  int hits = 0;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    int found = 0;
    for (int r = 0; r < static_cast<int>(lists[i].size()) && r < k; ++r)
      if (lists[i][static_cast<std::size_t>(r)] == labels[i]) found = 1;
    hits += found;
  }
  return static_cast<double>(hits) / static_cast<double>(lists.size());
}

double brute_ndcg(const std::vector<std::vector<int>>& lists,
                  const std::vector<int>& labels, int k) {
  double total = 0.0;
  for (std::size_t i = 0; i < lists.size(); ++i)
    for (int r = 0; r < static_cast<int>(lists[i].size()) && r < k; ++r)
      if (lists[i][static_cast<std::size_t>(r)] == labels[i])
        total += std::log(2.0) / std::log(static_cast<double>(r + 2));
  return total / static_cast<double>(lists.size());
}

}  // namespace

TEST_CASE("recall basics") {
  std::vector<std::vector<int>> lists = {{3, 1, 2}};
  CHECK(recall_at_k(lists, {3}, 1) == 1.0);
  CHECK(recall_at_k(lists, {2}, 2) == 0.0);
  CHECK(recall_at_k(lists, {2}, 3) == 1.0);
  CHECK_THROWS(recall_at_k(lists, {3}, 0));
}

TEST_CASE("ndcg basics") {
  CHECK(ndcg_at_k({{5, 1, 2}}, {5}, 3) == 1.0);           // hit at rank 1
  CHECK(ndcg_at_k({{1, 2, 5}}, {5}, 3) == 0.5);           // 1/log2(4)
  CHECK(ndcg_at_k({{1, 2, 3}}, {5}, 3) == 0.0);           // miss
  CHECK(ndcg_at_k({{1, 5}}, {5}, 2) ==
        doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-15));
}

TEST_CASE("random instances match brute force exactly") {
  Rng rng(17);
  const int n = 1000, catalog = 50;
  std::vector<std::vector<int>> lists;
  std::vector<int> labels;
  for (int i = 0; i < n; ++i) {
    std::vector<int> perm(catalog);
    for (int j = 0; j < catalog; ++j) perm[static_cast<std::size_t>(j)] = j;
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    lists.push_back(perm);
    labels.push_back(static_cast<int>(rng.below(catalog)));
  }
  for (int k : {1, 5, 10, 50}) {
    CHECK(recall_at_k(lists, labels, k) == brute_recall(lists, labels, k));
    CHECK(ndcg_at_k(lists, labels, k) ==
          doctest::Approx(brute_ndcg(lists, labels, k)).epsilon(1e-14));
  }
  CHECK(empirical_target_risk(lists, labels) == 1.0 - recall_at_k(lists, labels, 1));
  // full-catalog rankings contain every label
  CHECK(recall_at_k(lists, labels, catalog) == 1.0);

  // monotone and bounded: ndcg@K <= recall@K, both non-decreasing in K
  double prev_r = 0.0, prev_n = 0.0;
  for (int k = 1; k <= catalog; ++k) {
    const double r = recall_at_k(lists, labels, k);
    const double nd = ndcg_at_k(lists, labels, k);
    CHECK(r >= prev_r);
    CHECK(nd >= prev_n);
    CHECK(nd <= r + 1e-15);
    prev_r = r;
    prev_n = nd;
  }
}

TEST_CASE("target risk endpoints") {
  CHECK(empirical_target_risk({{1, 2}, {3, 4}}, {1, 3}) == 0.0);
  CHECK(empirical_target_risk({{1, 2}, {3, 4}}, {2, 4}) == 1.0);
}

TEST_CASE("popularity baseline") {
  // counts {0:3, 1:1}
  CHECK(popularity_baseline({0, 0, 0, 1}, 2) == std::vector<int>{0, 1});
  // tie broken by ascending id
  CHECK(popularity_baseline({0, 1, 1, 0}, 3) == std::vector<int>{0, 1, 2});
  CHECK_THROWS(popularity_baseline({}, 2));

  // recall@L of POP is 1 when every test label was seen in training
  auto pop = popularity_baseline({2, 0, 1, 2}, 3);
  std::vector<std::vector<int>> lists(5, pop);
  CHECK(recall_at_k(lists, {0, 1, 2, 2, 1}, 3) == 1.0);
}

TEST_CASE("ranking depends only on score order") {
  Rng rng(19);
  Vector scores(30);
  for (int i = 0; i < 30; ++i) scores[i] = rng.normal(0.0, 1.0);
  Vector transformed = scores.unaryExpr([](double s) { return std::exp(0.5 * s) + 3.0; });
  CHECK(rank_topk(scores, 30) == rank_topk(transformed, 30));

  // ties broken by ascending id
  Vector tied = Vector::Zero(4);
  CHECK(rank_topk(tied, 4) == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("report round trip fields") {
  EvalReport r = evaluate_rankings({{0, 1}, {1, 0}}, {0, 1}, {1, 2}, "POP", 7);
  CHECK(r.n_test == 2);
  CHECK(r.recall[2] == 1.0);
  CHECK(r.target_risk == 1.0 - r.recall[1]);
  auto rows = report_table_rows(r);
  CHECK(rows.find("POP\t1\trecall\t") != std::string::npos);
  CHECK(rows.find("\t7\n") != std::string::npos);
}
