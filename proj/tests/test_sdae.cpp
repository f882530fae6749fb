#include <doctest.h>

#include <cmath>

#include "crossrec/sdae.hpp"

using namespace crossrec;

namespace {

// Random sparse item vectors with a little structure.
std::vector<SparseVec> make_items(int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SparseVec> items;
  for (int i = 0; i < n; ++i) {
    SparseVec v;
    v.dim = dim;
    for (int j = 0; j < dim; ++j)
      if (rng.uniform() < 0.15) v.entries.emplace_back(j, rng.uniform());
    v.l2_normalize();
    items.push_back(std::move(v));
  }
  return items;
}

}  // namespace

TEST_CASE("corrupt") {
  Rng rng(1);
  Vector x = Vector::Ones(8);
  CHECK(corrupt(x, 0.0, rng) == x);
  CHECK_THROWS(corrupt(x, 1.0, rng));

  // rate 0.9: surviving fraction 0.1 +- 0.01 over 1e5 entries
  Matrix big = Matrix::Ones(100, 1000);
  Matrix c = corrupt_rows(big, 0.9, rng);
  CHECK(c.sum() / big.sum() == doctest::Approx(0.1).epsilon(0.1));
  CHECK(std::fabs(c.sum() / big.sum() - 0.1) < 0.01);
  // corruption never rescales survivors
  CHECK(c.maxCoeff() == 1.0);
}

TEST_CASE("sdae_apply shapes and inference determinism") {
  Rng rng(5);
  SdaeConfig cfg;
  cfg.hidden_dim = 16;
  cfg.code_dim = 64;
  SdaeModel model = SdaeModel::init(30, cfg, rng);

  Matrix x = Matrix::Random(4, 30);
  Rng r1(9), r2(9);
  SdaeActs a = sdae_apply(model, x, false, r1);
  CHECK(a.codes.cols() == 64);
  CHECK(a.recon.cols() == 30);

  Rng r3(1234);  // different rng must not matter at inference
  SdaeActs b = sdae_apply(model, x, false, r3);
  CHECK(a.codes == b.codes);
  CHECK(a.recon == b.recon);

  Matrix wrong = Matrix::Random(4, 31);
  CHECK_THROWS(sdae_apply(model, wrong, false, r1));
}

TEST_CASE("reconstruction loss is nonnegative and zero iff exact") {
  Rng rng(6);
  SdaeConfig cfg;
  cfg.hidden_dim = 4;
  cfg.code_dim = 2;
  SdaeModel model = SdaeModel::init(3, cfg, rng);
  Matrix x = Matrix::Random(2, 3);
  SdaeActs acts = sdae_apply(model, x, false, rng);
  CHECK(sdae_recon_loss(model, acts, x, 1.0, false) >= 0.0);
  CHECK(sdae_recon_loss(model, acts, acts.recon, 1.0, false) == 0.0);
}

TEST_CASE("training reduces reconstruction loss") {
  auto items = make_items(200, 40, 77);
  SdaeConfig cfg;
  cfg.hidden_dim = 32;
  cfg.code_dim = 16;
  cfg.input_corruption = 0.3;
  cfg.hidden_dropout = 0.1;

  // mean epoch loss non-increasing over the first 5 epochs, 3-seed average
  std::vector<double> mean_trace(5, 0.0);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    SdaeTrainConfig tc;
    tc.epochs = 5;
    tc.batch_size = 32;
    tc.lr = 1e-3;
    tc.seed = seed;
    auto res = train_sdae(items, cfg, tc);
    for (int e = 0; e < 5; ++e) mean_trace[e] += res.epoch_loss[e] / 3.0;
  }
  for (int e = 1; e < 5; ++e) CHECK(mean_trace[e] <= mean_trace[e - 1] + 1e-9);

  // final loss beats the constant mean-vector predictor
  Matrix x = densify_rows(items);
  Vector mean = x.colwise().mean();
  double mean_pred_loss = 0.0;
  for (int i = 0; i < x.rows(); ++i)
    mean_pred_loss += (x.row(i).transpose() - mean).squaredNorm();
  mean_pred_loss /= x.rows();

  SdaeTrainConfig tc;
  tc.epochs = 100;
  tc.batch_size = 32;
  tc.seed = 4;
  auto res = train_sdae(items, cfg, tc);
  Rng unused(0);
  SdaeActs acts = sdae_apply(res.model, x, false, unused);  // clean-input loss
  double final_loss = (acts.recon - x).squaredNorm() / x.rows();
  CHECK(final_loss < mean_pred_loss);
}

TEST_CASE("training determinism") {
  auto items = make_items(50, 20, 8);
  SdaeConfig cfg;
  cfg.hidden_dim = 8;
  cfg.code_dim = 4;
  SdaeTrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 16;
  tc.seed = 9;
  auto a = train_sdae(items, cfg, tc);
  auto b = train_sdae(items, cfg, tc);
  auto pa = a.model.params();
  auto pb = b.model.params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
  CHECK(a.epoch_loss == b.epoch_loss);

  CHECK_THROWS(train_sdae({}, cfg, tc));
}
