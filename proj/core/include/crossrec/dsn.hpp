#pragma once

#include <optional>
#include <vector>

#include "crossrec/nn.hpp"
#include "crossrec/sdae.hpp"

namespace crossrec {

struct DsnDims {
  int input_dim = 0;
  int num_labels = 0;
  int code_dim = 64;   // shared/private representation width
  int user_dim = 64;   // classifier output width = softmax weight width
  std::vector<int> encoder_hidden = {256, 128, 128};
  std::vector<int> decoder_hidden = {128, 128, 256};
  std::vector<int> classifier_hidden = {256, 256, 256};
  std::vector<int> disc_hidden = {1024, 1024};
  double encoder_dropout = 0.75;
  double decoder_dropout = 0.5;
  double classifier_dropout = 0.5;
  double disc_dropout = 0.5;
};

struct LossWeights {
  double alpha = 1e-3;        // reconstruction
  double beta = 1e-2;         // difference (subspace orthogonality)
  double gamma = 100.0;       // adversarial similarity
  double lambda_item = 1e-2;  // softmax-weight anchoring
  double lambda_ir = 100.0;   // item autoencoder reconstruction
  double weight_decay = 0.0;
};

struct DsnModel {
  Mlp shared_encoder;       // input_dim -> ... -> 64
  Mlp private_encoder_src;  // same shape
  Mlp private_encoder_tgt;  // same shape
  Mlp decoder;              // 64 -> ... -> input_dim
  Mlp classifier;           // 64 -> ... -> user_dim
  Mlp domain_disc;          // 64 -> 1024 -> 1024 -> 1 (logit output)
  Param softmax_weights;    // num_labels x user_dim
  DsnDims dims;

  static DsnModel init(const DsnDims& dims, Rng& rng);

  std::vector<Param*> params();
  // Weight matrices only (biases excluded); the weight-decay set.
  std::vector<Param*> weight_matrices();
  void zero_grads();
};

enum class Domain { kSource, kTarget };

struct Batch {
  Matrix inputs;                // n x input_dim
  std::vector<int> labels;      // source batches only
  Matrix label_item_features;   // n x item_dim, for the SDAE terms (optional)
};

// ---- Individual loss terms (shared with the tests) -----------------------

// || H_c * H_p^T ||_F^2 for one domain; callers sum the two domain terms.
double difference_loss(const Matrix& h_c, const Matrix& h_p);

// Binary cross-entropy with probabilities clamped to [1e-12, 1-1e-12].
double similarity_loss(const Vector& d_hat, const Vector& d);

// sum_i || v_{y_i} - h_i ||^2
double item_anchor_loss(const Matrix& softmax_weights, const std::vector<int>& labels,
                        const Matrix& item_codes);

// ---- Forward / objective -------------------------------------------------

struct DsnActs {
  Matrix h_c;       // n x 64
  Matrix h_p;       // n x 64
  Matrix recon;     // n x input_dim
  Matrix user;      // n x user_dim (source path: u = G(h_c))
  Matrix logits;    // n x L (source, full softmax)
  Vector disc_prob; // n, sigmoid(Z(GRL(h_c)))
};

// Inference-style forward through every component (activation shapes; the
// training objective uses dsn_total_loss which fuses forward and backward).
DsnActs dsn_forward(const DsnModel& model, const Batch& batch, Domain domain,
                    bool training, Rng& rng);

// User embedding u = G(E_c(x)) at inference; rows are examples.
Matrix user_embedding(const DsnModel& model, const Matrix& inputs);

// Exact top-K by dot product v_k . u, ties by ascending item id. Orders
// identically to the full softmax. K > L is clipped to L.
std::vector<std::pair<int, double>> recommend_topk(const DsnModel& model,
                                                   const SparseVec& history_features,
                                                   int k);

struct LossComponents {
  double task = 0.0;
  double recon = 0.0;
  double difference = 0.0;
  double similarity = 0.0;
  double item = 0.0;
  double ir = 0.0;

  double total(const LossWeights& w) const {
    return task + w.alpha * recon + w.beta * difference + w.gamma * similarity +
           w.lambda_item * item + w.lambda_ir * ir;
  }
};

// Computes every loss term over one source and one target batch and, when
// `accumulate_grads`, backpropagates the weighted objective into all model
// (and SDAE) parameter grads. `candidates` is the sampled label subset for
// the softmax; empty means the full label set. Components whose weight is
// zero are skipped entirely, so a run with beta=gamma=0 consumes exactly
// the rng draws of the plain classifier.
LossComponents dsn_total_loss(DsnModel& model, SdaeModel* sdae,
                              const Batch& source_batch, const Batch& target_batch,
                              const std::vector<int>& candidates,
                              const LossWeights& weights, bool training, Rng& rng,
                              bool accumulate_grads);

}  // namespace crossrec
