#pragma once

#include <vector>

#include "crossrec/nn.hpp"
#include "crossrec/sparse.hpp"

namespace crossrec {

struct SdaeConfig {
  int hidden_dim = 256;
  int code_dim = 64;
  double input_corruption = 0.9;  // mask-out rate on the raw input
  double hidden_dropout = 0.5;    // inverted dropout on interior layers
};

// Denoising autoencoder over item feature vectors; the 64-d codes anchor
// the classifier's softmax weight rows.
struct SdaeModel {
  Mlp encoder;  // item_dim -> hidden -> code (ELU throughout)
  Mlp decoder;  // code -> hidden -> item_dim (linear output)
  SdaeConfig cfg;
  int item_dim = 0;

  static SdaeModel init(int item_dim, const SdaeConfig& cfg, Rng& rng);

  std::vector<Param*> params();
  void zero_grads();
};

// Mask-out corruption: zeroes each entry with probability `rate`, no
// rescaling of survivors.
Vector corrupt(const Vector& x, double rate, Rng& rng);
Matrix corrupt_rows(const Matrix& x, double rate, Rng& rng);

struct SdaeActs {
  Matrix codes;  // n x code_dim
  Matrix recon;  // n x item_dim
  MlpCache enc_cache;
  MlpCache dec_cache;
};

SdaeActs sdae_apply(const SdaeModel& model, const Matrix& x_corrupted,
                    bool training, Rng& rng);

// Sum of squared reconstruction errors against the clean inputs; when
// `accumulate_grads`, backpropagates 2*(recon - x) through both halves.
double sdae_recon_loss(SdaeModel& model, const SdaeActs& acts, const Matrix& x_clean,
                       double weight, bool accumulate_grads,
                       Matrix* dcodes_extra = nullptr);

struct SdaeTrainConfig {
  int epochs = 5;
  int batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

struct SdaeTrainResult {
  SdaeModel model;
  std::vector<double> epoch_loss;  // mean per-example loss per epoch
};

SdaeTrainResult train_sdae(const std::vector<SparseVec>& items,
                           const SdaeConfig& cfg, const SdaeTrainConfig& tc);

// Inference-mode codes on clean inputs.
Matrix sdae_encode(const SdaeModel& model, const Matrix& x);

}  // namespace crossrec
