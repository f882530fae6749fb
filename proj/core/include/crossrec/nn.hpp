#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "crossrec/rng.hpp"

namespace crossrec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ELU with unit scale: x for x > 0, e^x - 1 otherwise.
double elu(double x);

// ELU derivative recovered from the activation output a = elu(x).
inline double elu_grad_from_output(double a) { return a > 0.0 ? 1.0 : a + 1.0; }

// Identity forward; the backward pass negates the upstream gradient.
Vector grl_backward(const Vector& upstream);
Matrix grl_backward(const Matrix& upstream);

// Inverted dropout. Training: zero each entry with probability `rate` and
// scale survivors by 1/(1-rate); inference: identity with an all-ones mask.
// The returned mask already carries the 1/(1-rate) scaling.
std::pair<Vector, Vector> dropout_apply(const Vector& x, double rate,
                                        bool training, Rng& rng);
Matrix dropout_mask(int rows, int cols, double rate, bool training, Rng& rng);

// Gaussian weights with variance 2/fan_in.
Matrix he_init(int fan_in, int rows, int cols, Rng& rng);

// One trainable tensor plus its gradient and Adam accumulators.
struct Param {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  Param() = default;
  Param(int rows, int cols)
      : value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)),
        adam_m(Matrix::Zero(rows, cols)),
        adam_v(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update with bias correction; t is the 1-based step count.
void adam_step(Param& p, long t, const AdamConfig& cfg = {});

// Softmax cross-entropy with max-subtraction. Returns (-log p_label,
// p - onehot(label)).
std::pair<double, Vector> softmax_ce(const Vector& logits, int label);

// Row-wise softmax probabilities (stable).
Matrix softmax_rows(const Matrix& logits);

enum class Activation { kLinear, kElu };

struct LayerSpec {
  int out_dim = 0;
  Activation act = Activation::kElu;
  double dropout = 0.0;  // applied to the layer input while training
};

struct MlpCache {
  std::vector<Matrix> inputs;  // post-dropout layer inputs
  std::vector<Matrix> masks;   // dropout masks (scaled); empty matrix if rate 0
  std::vector<Matrix> outputs; // post-activation layer outputs
};

// Dense feed-forward stack. Rows of the in/out matrices are examples.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int input_dim, std::vector<LayerSpec> specs, Rng& rng);

  int input_dim() const { return input_dim_; }
  int output_dim() const;

  Matrix forward(const Matrix& x, bool training, Rng& rng,
                 MlpCache* cache = nullptr) const;

  // Accumulates parameter gradients and returns dLoss/dInput.
  Matrix backward(const MlpCache& cache, const Matrix& upstream);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;

  struct Layer {
    Param weight;  // out_dim x in_dim
    Param bias;    // out_dim x 1
    Activation act;
    double dropout;
  };
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  int input_dim_ = 0;
  std::vector<Layer> layers_;
};

}  // namespace crossrec
