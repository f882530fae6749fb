#include "crossrec/sdae.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace crossrec {

SdaeModel SdaeModel::init(int item_dim, const SdaeConfig& cfg, Rng& rng) {
  SdaeModel m;
  m.cfg = cfg;
  m.item_dim = item_dim;
  m.encoder = Mlp(item_dim,
                  {{cfg.hidden_dim, Activation::kElu, 0.0},
                   {cfg.code_dim, Activation::kElu, cfg.hidden_dropout}},
                  rng);
  m.decoder = Mlp(cfg.code_dim,
                  {{cfg.hidden_dim, Activation::kElu, cfg.hidden_dropout},
                   {item_dim, Activation::kLinear, cfg.hidden_dropout}},
                  rng);
  return m;
}

std::vector<Param*> SdaeModel::params() {
  std::vector<Param*> out = encoder.params();
  auto dec = decoder.params();
  out.insert(out.end(), dec.begin(), dec.end());
  return out;
}

void SdaeModel::zero_grads() {
  for (Param* p : params()) p->zero_grad();
}

Matrix corrupt_rows(const Matrix& x, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("corruption rate must be in [0,1)");
  if (rate == 0.0) return x;
  Matrix out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      if (rng.uniform() < rate) out(i, j) = 0.0;
  return out;
}

Vector corrupt(const Vector& x, double rate, Rng& rng) {
  Matrix m = corrupt_rows(x.transpose(), rate, rng);
  return m.row(0).transpose();
}

SdaeActs sdae_apply(const SdaeModel& model, const Matrix& x_corrupted,
                    bool training, Rng& rng) {
  if (x_corrupted.cols() != model.item_dim)
    throw std::invalid_argument("sdae_apply: input dimension mismatch");
  SdaeActs acts;
  acts.codes = model.encoder.forward(x_corrupted, training, rng, &acts.enc_cache);
  acts.recon = model.decoder.forward(acts.codes, training, rng, &acts.dec_cache);
  return acts;
}

double sdae_recon_loss(SdaeModel& model, const SdaeActs& acts, const Matrix& x_clean,
                       double weight, bool accumulate_grads, Matrix* dcodes_extra) {
  Matrix diff = acts.recon - x_clean;
  const double loss = diff.squaredNorm();
  if (accumulate_grads) {
    Matrix dcodes = model.decoder.backward(acts.dec_cache, 2.0 * weight * diff);
    if (dcodes_extra) dcodes += *dcodes_extra;
    model.encoder.backward(acts.enc_cache, dcodes);
  }
  return loss;
}

SdaeTrainResult train_sdae(const std::vector<SparseVec>& items,
                           const SdaeConfig& cfg, const SdaeTrainConfig& tc) {
  if (items.empty()) throw std::invalid_argument("train_sdae: no items");
  const Matrix x = densify_rows(items);
  const int n = static_cast<int>(x.rows());

  Rng init_rng(tc.seed);
  SdaeTrainResult res{SdaeModel::init(static_cast<int>(x.cols()), cfg, init_rng), {}};
  SdaeModel& model = res.model;

  Rng rng(tc.seed + 0x5dae);
  AdamConfig adam{tc.lr, 0.9, 0.999, 1e-8};
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  long step = 0;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += tc.batch_size) {
      const int bs = std::min(tc.batch_size, n - start);
      Matrix batch(bs, x.cols());
      for (int i = 0; i < bs; ++i) batch.row(i) = x.row(order[start + i]);

      Matrix corrupted = corrupt_rows(batch, cfg.input_corruption, rng);
      SdaeActs acts = sdae_apply(model, corrupted, /*training=*/true, rng);
      model.zero_grads();
      epoch_loss += sdae_recon_loss(model, acts, batch, 1.0, true);
      ++step;
      for (Param* p : model.params()) adam_step(*p, step, adam);
    }
    res.epoch_loss.push_back(epoch_loss / n);
  }
  return res;
}

Matrix sdae_encode(const SdaeModel& model, const Matrix& x) {
  Rng unused(0);
  return model.encoder.forward(x, /*training=*/false, unused);
}

}  // namespace crossrec
