#include "crossrec/dsn.hpp"

#include "crossrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crossrec {

namespace {

std::vector<LayerSpec> stack_specs(const std::vector<int>& hidden, int out_dim,
                                   Activation out_act, double dropout) {
  std::vector<LayerSpec> specs;
  for (int h : hidden) specs.push_back({h, Activation::kElu, dropout});
  specs.push_back({out_dim, out_act, dropout});
  return specs;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kProbClamp = 1e-12;

double clamped_log(double p) {
  return std::log(std::clamp(p, kProbClamp, 1.0 - kProbClamp));
}

}  // namespace

DsnModel DsnModel::init(const DsnDims& dims, Rng& rng) {
  DsnModel m;
  m.dims = dims;
  m.shared_encoder = Mlp(dims.input_dim,
                         stack_specs(dims.encoder_hidden, dims.code_dim,
                                     Activation::kElu, dims.encoder_dropout),
                         rng);
  m.private_encoder_src = Mlp(dims.input_dim,
                              stack_specs(dims.encoder_hidden, dims.code_dim,
                                          Activation::kElu, dims.encoder_dropout),
                              rng);
  m.private_encoder_tgt = Mlp(dims.input_dim,
                              stack_specs(dims.encoder_hidden, dims.code_dim,
                                          Activation::kElu, dims.encoder_dropout),
                              rng);
  m.decoder = Mlp(dims.code_dim,
                  stack_specs(dims.decoder_hidden, dims.input_dim,
                              Activation::kLinear, dims.decoder_dropout),
                  rng);
  m.classifier = Mlp(dims.code_dim,
                     stack_specs(dims.classifier_hidden, dims.user_dim,
                                 Activation::kElu, dims.classifier_dropout),
                     rng);
  m.domain_disc = Mlp(dims.code_dim,
                      stack_specs(dims.disc_hidden, 1, Activation::kLinear,
                                  dims.disc_dropout),
                      rng);
  m.softmax_weights = Param(dims.num_labels, dims.user_dim);
  m.softmax_weights.value = he_init(dims.user_dim, dims.num_labels, dims.user_dim, rng);
  return m;
}

std::vector<Param*> DsnModel::params() {
  std::vector<Param*> out;
  for (Mlp* net : {&shared_encoder, &private_encoder_src, &private_encoder_tgt,
                   &decoder, &classifier, &domain_disc}) {
    auto p = net->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  out.push_back(&softmax_weights);
  return out;
}

std::vector<Param*> DsnModel::weight_matrices() {
  std::vector<Param*> out;
  for (Mlp* net : {&shared_encoder, &private_encoder_src, &private_encoder_tgt,
                   &decoder, &classifier, &domain_disc})
    for (auto& layer : net->layers()) out.push_back(&layer.weight);
  out.push_back(&softmax_weights);
  return out;
}

void DsnModel::zero_grads() {
  for (Param* p : params()) p->zero_grad();
}

double difference_loss(const Matrix& h_c, const Matrix& h_p) {
  if (h_c.rows() != h_p.rows() || h_c.cols() != h_p.cols())
    throw std::invalid_argument("difference_loss: shape mismatch");
  return (h_c * h_p.transpose()).squaredNorm();
}

double similarity_loss(const Vector& d_hat, const Vector& d) {
  if (d_hat.size() != d.size())
    throw std::invalid_argument("similarity_loss: shape mismatch");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    loss -= d[i] * clamped_log(d_hat[i]) + (1.0 - d[i]) * clamped_log(1.0 - d_hat[i]);
  return loss;
}

double item_anchor_loss(const Matrix& softmax_weights, const std::vector<int>& labels,
                        const Matrix& item_codes) {
  if (static_cast<Eigen::Index>(labels.size()) != item_codes.rows())
    throw std::invalid_argument("item_anchor_loss: shape mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= softmax_weights.rows())
      throw std::out_of_range("item_anchor_loss: label out of range");
    loss += (softmax_weights.row(labels[i]) - item_codes.row(static_cast<Eigen::Index>(i)))
                .squaredNorm();
  }
  return loss;
}

DsnActs dsn_forward(const DsnModel& model, const Batch& batch, Domain domain,
                    bool training, Rng& rng) {
  DsnActs acts;
  acts.h_c = model.shared_encoder.forward(batch.inputs, training, rng);
  const Mlp& priv = domain == Domain::kSource ? model.private_encoder_src
                                              : model.private_encoder_tgt;
  acts.h_p = priv.forward(batch.inputs, training, rng);
  acts.recon = model.decoder.forward(acts.h_c + acts.h_p, training, rng);
  acts.user = model.classifier.forward(acts.h_c, training, rng);
  if (domain == Domain::kSource)
    acts.logits = acts.user * model.softmax_weights.value.transpose();
  Matrix z = model.domain_disc.forward(acts.h_c, training, rng);
  acts.disc_prob = z.col(0).unaryExpr([](double v) { return sigmoid(v); });
  return acts;
}

Matrix user_embedding(const DsnModel& model, const Matrix& inputs) {
  Rng unused(0);
  Matrix h_c = model.shared_encoder.forward(inputs, false, unused);
  return model.classifier.forward(h_c, false, unused);
}

std::vector<std::pair<int, double>> recommend_topk(const DsnModel& model,
                                                   const SparseVec& history_features,
                                                   int k) {
  if (k < 1) throw std::invalid_argument("recommend_topk: K must be >= 1");
  Matrix x = history_features.densify().transpose();
  Matrix u = user_embedding(model, x);
  Vector scores = model.softmax_weights.value * u.row(0).transpose();
  std::vector<int> top = rank_topk(scores, k);
  std::vector<std::pair<int, double>> out;
  out.reserve(top.size());
  for (int idx : top) out.emplace_back(idx, scores[idx]);
  return out;
}

namespace {

// Softmax cross-entropy over the candidate-restricted logits. Writes the
// gradient w.r.t. u rows and the candidate rows of V.
double task_loss_and_grads(DsnModel& model, const Matrix& user,
                           const std::vector<int>& labels,
                           const std::vector<int>& candidates, bool accumulate,
                           Matrix* d_user) {
  const Matrix& v = model.softmax_weights.value;
  const int n = static_cast<int>(user.rows());

  Matrix v_cand;
  std::vector<int> cand;
  if (candidates.empty()) {
    cand.resize(static_cast<std::size_t>(v.rows()));
    for (int i = 0; i < v.rows(); ++i) cand[static_cast<std::size_t>(i)] = i;
    v_cand = v;
  } else {
    cand = candidates;
    v_cand.resize(static_cast<Eigen::Index>(cand.size()), v.cols());
    for (std::size_t i = 0; i < cand.size(); ++i)
      v_cand.row(static_cast<Eigen::Index>(i)) = v.row(cand[i]);
  }

  Matrix logits = user * v_cand.transpose();  // n x S
  Matrix dlogits(n, logits.cols());
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    auto it = std::lower_bound(cand.begin(), cand.end(), labels[static_cast<std::size_t>(i)]);
    if (it == cand.end() || *it != labels[static_cast<std::size_t>(i)])
      throw std::invalid_argument("task loss: batch label missing from candidates");
    const int local = static_cast<int>(it - cand.begin());
    auto [l, g] = softmax_ce(logits.row(i).transpose(), local);
    loss += l;
    dlogits.row(i) = g.transpose();
  }
  if (accumulate) {
    *d_user = dlogits * v_cand;
    Matrix dv_cand = dlogits.transpose() * user;  // S x user_dim
    for (std::size_t i = 0; i < cand.size(); ++i)
      model.softmax_weights.grad.row(cand[i]) += dv_cand.row(static_cast<Eigen::Index>(i));
  }
  return loss;
}

}  // namespace

LossComponents dsn_total_loss(DsnModel& model, SdaeModel* sdae,
                              const Batch& source_batch, const Batch& target_batch,
                              const std::vector<int>& candidates,
                              const LossWeights& w, bool training, Rng& rng,
                              bool accumulate_grads) {
  if (source_batch.labels.empty())
    throw std::invalid_argument("dsn_total_loss: source batch must be labeled");
  if (!target_batch.labels.empty())
    throw std::invalid_argument("dsn_total_loss: target batch must be unlabeled");

  const bool need_private = w.alpha > 0.0 || w.beta > 0.0;
  const bool need_decoder = w.alpha > 0.0;
  const bool need_disc = w.gamma > 0.0;
  const bool need_sdae = sdae != nullptr && (w.lambda_item > 0.0 || w.lambda_ir > 0.0);
  const bool need_target = need_private || need_disc;

  LossComponents comps;

  auto run_domain = [&](const Batch& batch, Domain domain) {
    const int n = static_cast<int>(batch.inputs.rows());
    MlpCache cache_c;
    Matrix h_c = model.shared_encoder.forward(batch.inputs, training, rng, &cache_c);
    Matrix d_hc = Matrix::Zero(n, model.dims.code_dim);

    Mlp& priv = domain == Domain::kSource ? model.private_encoder_src
                                          : model.private_encoder_tgt;
    MlpCache cache_p;
    Matrix h_p, d_hp;
    if (need_private) {
      h_p = priv.forward(batch.inputs, training, rng, &cache_p);
      d_hp = Matrix::Zero(n, model.dims.code_dim);
    }

    if (need_decoder) {
      MlpCache cache_d;
      Matrix recon = model.decoder.forward(h_c + h_p, training, rng, &cache_d);
      Matrix diff = recon - batch.inputs;
      comps.recon += diff.squaredNorm();
      if (accumulate_grads) {
        Matrix d_sum = model.decoder.backward(cache_d, 2.0 * w.alpha * diff);
        d_hc += d_sum;
        d_hp += d_sum;
      }
    }

    if (w.beta > 0.0) {
      Matrix cross = h_c * h_p.transpose();  // n x n
      comps.difference += cross.squaredNorm();
      if (accumulate_grads) {
        d_hc.noalias() += 2.0 * w.beta * cross * h_p;
        d_hp.noalias() += 2.0 * w.beta * cross.transpose() * h_c;
      }
    }

    if (need_disc) {
      MlpCache cache_z;
      Matrix zlog = model.domain_disc.forward(h_c, training, rng, &cache_z);
      const double d_label = domain == Domain::kSource ? 0.0 : 1.0;
      Vector d_hat = zlog.col(0).unaryExpr([](double v) { return sigmoid(v); });
      comps.similarity +=
          similarity_loss(d_hat, Vector::Constant(n, d_label));
      if (accumulate_grads) {
        Matrix dz(n, 1);
        dz.col(0) = w.gamma * (d_hat.array() - d_label).matrix();
        Matrix d_hc_adv = model.domain_disc.backward(cache_z, dz);
        d_hc += grl_backward(d_hc_adv);  // adversarial sign flip into E_c
      }
    }

    if (domain == Domain::kSource) {
      MlpCache cache_g;
      Matrix user = model.classifier.forward(h_c, training, rng, &cache_g);
      Matrix d_user;
      comps.task += task_loss_and_grads(model, user, batch.labels, candidates,
                                        accumulate_grads, &d_user);

      if (need_sdae) {
        Matrix corrupted =
            corrupt_rows(batch.label_item_features, sdae->cfg.input_corruption, rng);
        SdaeActs acts = sdae_apply(*sdae, corrupted, training, rng);
        Matrix d_codes = Matrix::Zero(n, sdae->cfg.code_dim);
        if (w.lambda_item > 0.0) {
          comps.item += item_anchor_loss(model.softmax_weights.value, batch.labels,
                                         acts.codes);
          if (accumulate_grads) {
            for (int i = 0; i < n; ++i) {
              Eigen::RowVectorXd delta =
                  model.softmax_weights.value.row(batch.labels[static_cast<std::size_t>(i)]) -
                  acts.codes.row(i);
              model.softmax_weights.grad.row(batch.labels[static_cast<std::size_t>(i)]) +=
                  2.0 * w.lambda_item * delta;
              d_codes.row(i) -= 2.0 * w.lambda_item * delta;
            }
          }
        }
        comps.ir += sdae_recon_loss(*sdae, acts, batch.label_item_features, w.lambda_ir,
                                    accumulate_grads, &d_codes);
      }

      if (accumulate_grads) d_hc += model.classifier.backward(cache_g, d_user);
    }

    if (accumulate_grads) {
      if (need_private) priv.backward(cache_p, d_hp);
      model.shared_encoder.backward(cache_c, d_hc);
    }
  };

  run_domain(source_batch, Domain::kSource);
  if (need_target) run_domain(target_batch, Domain::kTarget);
  return comps;
}

}  // namespace crossrec
