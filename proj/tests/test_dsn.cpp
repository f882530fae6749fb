#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "crossrec/dsn.hpp"
#include "crossrec/eval.hpp"
#include "crossrec/io.hpp"

using namespace crossrec;

namespace {

DsnDims small_dims(int input_dim, int num_labels) {
  DsnDims d;
  d.input_dim = input_dim;
  d.num_labels = num_labels;
  d.code_dim = 8;
  d.user_dim = 8;
  d.encoder_hidden = {12, 10};
  d.decoder_hidden = {10, 12};
  d.classifier_hidden = {10};
  d.disc_hidden = {10};
  return d;
}

Batch make_source(int n, int input_dim, int num_labels, Rng& rng) {
  Batch b;
  b.inputs = he_init(input_dim, n, input_dim, rng);
  for (int i = 0; i < n; ++i)
    b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(num_labels))));
  return b;
}

}  // namespace

TEST_CASE("difference loss") {
  Matrix hc = Matrix::Zero(2, 64);
  Matrix hp = Matrix::Zero(2, 64);
  hc(0, 0) = 1.0;
  hp(0, 1) = 1.0;  // orthogonal rows
  CHECK(difference_loss(hc, hp) == 0.0);

  Matrix single = Matrix::Zero(1, 64);
  single(0, 0) = 1.0;
  CHECK(difference_loss(single, single) == 1.0);

  // brute-force double loop oracle on random 3x64 inputs
  Rng rng(3);
  Matrix c = he_init(64, 3, 64, rng), p = he_init(64, 3, 64, rng);
  double brute = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 64; ++k) dot += c(i, k) * p(j, k);
      brute += dot * dot;
    }
  CHECK(std::fabs(difference_loss(c, p) - brute) < 1e-10);

  CHECK_THROWS(difference_loss(Matrix::Zero(2, 64), Matrix::Zero(3, 64)));
}

TEST_CASE("similarity loss") {
  Vector half = Vector::Constant(1, 0.5);
  Vector zero = Vector::Zero(1);
  CHECK(std::fabs(similarity_loss(half, zero) - std::log(2.0)) < 1e-12);

  // perfect prediction: loss -> 0
  Vector good = Vector::Constant(1, 1e-15);  // clamped
  CHECK(similarity_loss(good, zero) < 1e-11);
  Vector d1 = Vector::Ones(1);
  CHECK(similarity_loss(Vector::Constant(1, 1.0), d1) < 1e-11);

  CHECK_THROWS(similarity_loss(Vector::Zero(2), Vector::Zero(3)));
}

TEST_CASE("item anchor loss") {
  Matrix v = Matrix::Zero(5, 64);
  Matrix codes = Matrix::Zero(2, 64);
  std::vector<int> labels = {1, 4};
  v.row(1) = codes.row(0);
  v.row(4) = codes.row(1);
  CHECK(item_anchor_loss(v, labels, codes) == 0.0);

  Matrix v2 = Matrix::Zero(3, 64);
  v2(0, 0) = 1.0;
  CHECK(item_anchor_loss(v2, {0}, Matrix::Zero(1, 64)) == 1.0);

  // brute-force oracle on a random 4-example batch
  Rng rng(4);
  Matrix v3 = he_init(64, 6, 64, rng);
  Matrix c3 = he_init(64, 4, 64, rng);
  std::vector<int> l3 = {0, 5, 2, 2};
  double brute = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 64; ++k) {
      const double d = v3(l3[static_cast<std::size_t>(i)], k) - c3(i, k);
      brute += d * d;
    }
  CHECK(item_anchor_loss(v3, l3, c3) == doctest::Approx(brute).epsilon(1e-12));

  CHECK_THROWS(item_anchor_loss(v3, {7}, Matrix::Zero(1, 64)));
}

TEST_CASE("forward shapes and zero-weight model") {
  Rng rng(10);
  DsnDims dims = small_dims(20, 7);
  DsnModel model = DsnModel::init(dims, rng);
  Batch src = make_source(4, 20, 7, rng);

  DsnActs acts = dsn_forward(model, src, Domain::kSource, false, rng);
  CHECK(acts.h_c.rows() == 4);
  CHECK(acts.h_c.cols() == 8);
  CHECK(acts.h_p.cols() == 8);
  CHECK(acts.user.cols() == 8);
  CHECK(acts.recon.cols() == 20);
  CHECK(acts.logits.cols() == 7);
  CHECK(acts.disc_prob.size() == 4);

  // all-zero parameters force all-zero activations
  for (Param* p : model.params()) p->value.setZero();
  DsnActs z = dsn_forward(model, src, Domain::kSource, false, rng);
  CHECK(z.h_c == Matrix::Zero(4, 8));
  CHECK(z.h_p == Matrix::Zero(4, 8));
  CHECK(z.recon == Matrix::Zero(4, 20));

  // inference twice -> identical activations
  Rng r1(1), r2(2);
  DsnModel m2 = DsnModel::init(dims, rng);
  DsnActs a1 = dsn_forward(m2, src, Domain::kSource, false, r1);
  DsnActs a2 = dsn_forward(m2, src, Domain::kSource, false, r2);
  CHECK(a1.logits == a2.logits);
}

TEST_CASE("total loss reduces to task loss with zero weights") {
  Rng rng(12);
  DsnDims dims = small_dims(20, 7);
  DsnModel model = DsnModel::init(dims, rng);
  Batch src = make_source(4, 20, 7, rng);
  Batch tgt;
  tgt.inputs = he_init(20, 4, 20, rng);

  LossWeights zero_w{0, 0, 0, 0, 0, 0};
  Rng fwd(33);
  LossComponents c = dsn_total_loss(model, nullptr, src, tgt, {}, zero_w, false, fwd, false);
  CHECK(c.total(zero_w) == c.task);
  CHECK(c.recon == 0.0);
  CHECK(c.similarity == 0.0);

  // labeled target batch rejected
  Batch bad_tgt = make_source(2, 20, 7, rng);
  CHECK_THROWS(dsn_total_loss(model, nullptr, src, bad_tgt, {}, zero_w, false, fwd, false));
}

TEST_CASE("default loss weights") {
  LossWeights w;
  CHECK(w.alpha == 1e-3);
  CHECK(w.beta == 1e-2);
  CHECK(w.gamma == 100.0);
  CHECK(w.lambda_item == 1e-2);
  CHECK(w.lambda_ir == 100.0);
}

TEST_CASE("logit ranking equals softmax-probability ranking") {
  Rng rng(14);
  Vector logits(20);
  for (int i = 0; i < 20; ++i) logits[i] = rng.normal(0.0, 2.0);
  Matrix probs = softmax_rows(logits.transpose());
  auto by_logit = rank_topk(logits, 20);
  auto by_prob = rank_topk(probs.row(0).transpose(), 20);
  CHECK(by_logit == by_prob);
}

TEST_CASE("source batches never touch the target private encoder") {
  Rng rng(15);
  DsnDims dims = small_dims(16, 5);
  DsnModel model = DsnModel::init(dims, rng);
  LossWeights w{0.5, 0.5, 0.0, 0.0, 0.0, 0.0};

  Batch src = make_source(3, 16, 5, rng);
  Batch tgt_a, tgt_b;
  tgt_a.inputs = he_init(16, 3, 16, rng);
  tgt_b.inputs = he_init(16, 3, 16, rng);

  auto src_encoder_grads = [&](const Batch& tgt) {
    model.zero_grads();
    Rng fwd(77);
    dsn_total_loss(model, nullptr, src, tgt, {}, w, false, fwd, true);
    std::vector<Matrix> g;
    for (Param* p : model.private_encoder_src.params()) g.push_back(p->grad);
    return g;
  };
  // changing the target batch must not change source private-encoder grads
  auto ga = src_encoder_grads(tgt_a);
  auto gb = src_encoder_grads(tgt_b);
  for (std::size_t i = 0; i < ga.size(); ++i) CHECK(ga[i] == gb[i]);

  // symmetrically, changing the source batch leaves target grads alone
  auto tgt_encoder_grads = [&](const Batch& s) {
    model.zero_grads();
    Rng fwd(79);
    dsn_total_loss(model, nullptr, s, tgt_a, {}, w, false, fwd, true);
    std::vector<Matrix> g;
    for (Param* p : model.private_encoder_tgt.params()) g.push_back(p->grad);
    return g;
  };
  Batch src2 = make_source(3, 16, 5, rng);
  auto ta = tgt_encoder_grads(src);
  auto tb = tgt_encoder_grads(src2);
  for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i] == tb[i]);
}

TEST_CASE("recommend_topk and serialization round trip") {
  namespace fs = std::filesystem;
  Rng rng(16);
  DsnDims dims = small_dims(24, 9);
  DsnModel model = DsnModel::init(dims, rng);

  SparseVec hist;
  hist.dim = 24;
  hist.entries = {{1, 0.4}, {5, 0.6}, {20, 0.2}};
  hist.l2_normalize();

  auto top = recommend_topk(model, hist, 9);
  CHECK(top.size() == 9);  // K = L: permutation of the catalog
  std::vector<int> ids;
  for (auto& [id, score] : top) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (int i = 0; i < 9; ++i) CHECK(ids[static_cast<std::size_t>(i)] == i);

  // top-1 equals the softmax argmax
  Matrix u = user_embedding(model, hist.densify().transpose());
  Vector logits = model.softmax_weights.value * u.row(0).transpose();
  Matrix probs = softmax_rows(logits.transpose());
  int amax;
  probs.row(0).maxCoeff(&amax);
  CHECK(top[0].first == amax);

  // reload reproduces identical rankings
  const auto path = fs::temp_directory_path() / "crossrec_dsn_roundtrip.txt";
  save_dsn_model(model, path.string());
  DsnModel loaded = load_dsn_model(path.string());
  Rng hist_rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    SparseVec h;
    h.dim = 24;
    for (int j = 0; j < 24; ++j)
      if (hist_rng.uniform() < 0.3) h.entries.emplace_back(j, hist_rng.uniform());
    h.l2_normalize();
    auto a = recommend_topk(model, h, 5);
    auto b = recommend_topk(loaded, h, 5);
    CHECK(a == b);
  }

  // a second save of the loaded model is byte-identical
  const auto path2 = fs::temp_directory_path() / "crossrec_dsn_roundtrip2.txt";
  save_dsn_model(loaded, path2.string());
  CHECK(file_hash_hex(path.string()) == file_hash_hex(path2.string()));
  fs::remove(path);
  fs::remove(path2);
}
