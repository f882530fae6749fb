#include "crossrec/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace crossrec {

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

Vector grl_backward(const Vector& upstream) { return -upstream; }
Matrix grl_backward(const Matrix& upstream) { return -upstream; }

Matrix dropout_mask(int rows, int cols, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("dropout rate must be in [0,1)");
  Matrix mask = Matrix::Ones(rows, cols);
  if (!training || rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      mask(i, j) = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

std::pair<Vector, Vector> dropout_apply(const Vector& x, double rate,
                                        bool training, Rng& rng) {
  Matrix mask = dropout_mask(static_cast<int>(x.size()), 1, rate, training, rng);
  Vector m = mask.col(0);
  return {x.cwiseProduct(m), m};
}

Matrix he_init(int fan_in, int rows, int cols, Rng& rng) {
  if (fan_in < 1) throw std::invalid_argument("fan_in must be >= 1");
  const double stddev = std::sqrt(2.0 / fan_in);
  Matrix w(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) w(i, j) = rng.normal(0.0, stddev);
  return w;
}

void adam_step(Param& p, long t, const AdamConfig& cfg) {
  if (t < 1) throw std::invalid_argument("adam step count must be >= 1");
  p.adam_m = cfg.beta1 * p.adam_m + (1.0 - cfg.beta1) * p.grad;
  p.adam_v = cfg.beta2 * p.adam_v.array().matrix() +
             (1.0 - cfg.beta2) * p.grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  p.value.array() -= cfg.lr * (p.adam_m.array() / bc1) /
                     ((p.adam_v.array() / bc2).sqrt() + cfg.eps);
}

std::pair<double, Vector> softmax_ce(const Vector& logits, int label) {
  const int n = static_cast<int>(logits.size());
  if (label < 0 || label >= n)
    throw std::out_of_range("softmax_ce: label out of range");
  const double mx = logits.maxCoeff();
  Vector ex = (logits.array() - mx).exp();
  const double z = ex.sum();
  Vector p = ex / z;
  const double loss = -(logits[label] - mx - std::log(z));
  Vector grad = p;
  grad[label] -= 1.0;
  return {loss, grad};
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    Eigen::RowVectorXd ex = (logits.row(i).array() - mx).exp();
    p.row(i) = ex / ex.sum();
  }
  return p;
}

Mlp::Mlp(int input_dim, std::vector<LayerSpec> specs, Rng& rng)
    : input_dim_(input_dim) {
  int in = input_dim;
  layers_.reserve(specs.size());
  for (const LayerSpec& s : specs) {
    Layer layer;
    layer.weight = Param(s.out_dim, in);
    layer.weight.value = he_init(in, s.out_dim, in, rng);
    layer.bias = Param(s.out_dim, 1);  // biases start at zero
    layer.act = s.act;
    layer.dropout = s.dropout;
    layers_.push_back(std::move(layer));
    in = s.out_dim;
  }
}

int Mlp::output_dim() const {
  return layers_.empty() ? input_dim_
                         : static_cast<int>(layers_.back().weight.value.rows());
}

Matrix Mlp::forward(const Matrix& x, bool training, Rng& rng,
                    MlpCache* cache) const {
  if (x.cols() != input_dim_)
    throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->masks.clear();
    cache->outputs.clear();
  }
  Matrix a = x;
  for (const Layer& layer : layers_) {
    Matrix mask;
    if (layer.dropout > 0.0 && training) {
      mask = dropout_mask(static_cast<int>(a.rows()), static_cast<int>(a.cols()),
                          layer.dropout, training, rng);
      a = a.cwiseProduct(mask);
    }
    if (cache) {
      cache->inputs.push_back(a);
      cache->masks.push_back(mask);
    }
    Matrix z = a * layer.weight.value.transpose();
    z.rowwise() += layer.bias.value.col(0).transpose();
    if (layer.act == Activation::kElu)
      z = z.unaryExpr([](double v) { return elu(v); });
    if (cache) cache->outputs.push_back(z);
    a = std::move(z);
  }
  return a;
}

Matrix Mlp::backward(const MlpCache& cache, const Matrix& upstream) {
  Matrix d = upstream;
  for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
    Layer& layer = layers_[li];
    Matrix dz = d;
    if (layer.act == Activation::kElu) {
      const Matrix& out = cache.outputs[li];
      dz = dz.cwiseProduct(
          out.unaryExpr([](double a) { return elu_grad_from_output(a); }));
    }
    const Matrix& in = cache.inputs[li];
    layer.weight.grad.noalias() += dz.transpose() * in;
    layer.bias.grad.col(0) += dz.colwise().sum().transpose();
    d.noalias() = dz * layer.weight.value;
    if (cache.masks[li].size() > 0) d = d.cwiseProduct(cache.masks[li]);
  }
  return d;
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> out;
  for (Layer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Param*> Mlp::params() const {
  std::vector<const Param*> out;
  for (const Layer& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

}  // namespace crossrec
