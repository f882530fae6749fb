#include "crossrec/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "crossrec/io.hpp"

namespace crossrec {

std::vector<int> sample_candidates(int num_labels, int sample_size,
                                   const std::set<int>& batch_labels, Rng& rng) {
  if (sample_size > num_labels)
    throw std::invalid_argument("sample_candidates: S > L");
  if (sample_size < static_cast<int>(batch_labels.size()))
    throw std::invalid_argument("sample_candidates: S < batch positives");
  std::set<int> chosen = batch_labels;
  while (static_cast<int>(chosen.size()) < sample_size)
    chosen.insert(static_cast<int>(rng.below(static_cast<std::uint64_t>(num_labels))));
  return {chosen.begin(), chosen.end()};
}

std::size_t select_model(const std::vector<CheckpointMetrics>& checkpoints,
                         SelectionCriterion criterion) {
  if (checkpoints.empty()) throw std::invalid_argument("select_model: no checkpoints");
  std::size_t best = 0;
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    const bool better = criterion == SelectionCriterion::kCrossEntropy
                            ? checkpoints[i].ce < checkpoints[best].ce
                            : checkpoints[i].ndcg100 > checkpoints[best].ndcg100;
    if (better) best = i;  // ties keep the earliest
  }
  return best;
}

namespace {

Matrix gather_rows(const std::vector<SparseVec>& rows, const std::vector<int>& order,
                   int start, int count) {
  Matrix m = Matrix::Zero(count, rows[0].dim);
  for (int i = 0; i < count; ++i) {
    const SparseVec& r = rows[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
    for (const auto& [idx, w] : r.entries) m(i, idx) = w;
  }
  return m;
}

}  // namespace

std::vector<std::vector<int>> rank_dataset(const DsnModel& model,
                                           const Dataset& data, int k) {
  std::vector<std::vector<int>> ranked;
  ranked.reserve(data.size());
  const int chunk = 512;
  for (int start = 0; start < static_cast<int>(data.size()); start += chunk) {
    const int n = std::min(chunk, static_cast<int>(data.size()) - start);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), start);
    Matrix x = gather_rows(data.features, order, 0, n);
    Matrix u = user_embedding(model, x);
    Matrix scores = u * model.softmax_weights.value.transpose();
    for (int i = 0; i < n; ++i)
      ranked.push_back(rank_topk(scores.row(i).transpose(), k));
  }
  return ranked;
}

double dataset_cross_entropy(const DsnModel& model, const Dataset& data) {
  if (!data.labeled()) throw std::invalid_argument("dataset_cross_entropy: unlabeled data");
  double total = 0.0;
  const int chunk = 512;
  for (int start = 0; start < static_cast<int>(data.size()); start += chunk) {
    const int n = std::min(chunk, static_cast<int>(data.size()) - start);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), start);
    Matrix x = gather_rows(data.features, order, 0, n);
    Matrix u = user_embedding(model, x);
    Matrix logits = u * model.softmax_weights.value.transpose();
    for (int i = 0; i < n; ++i)
      total += softmax_ce(logits.row(i).transpose(),
                          data.labels[static_cast<std::size_t>(start + i)])
                   .first;
  }
  return total / static_cast<double>(data.size());
}

TrainResult train(const Dataset& source, const Dataset& target,
                  const std::vector<SparseVec>& item_features,
                  const DsnDims& dims_template, const SdaeConfig& sdae_cfg,
                  const TrainConfig& config, const std::string& checkpoint_dir) {
  if (source.size() == 0 || target.size() == 0)
    throw std::invalid_argument("train: empty dataset");
  if (!source.labeled()) throw std::invalid_argument("train: source must be labeled");
  if (target.labeled()) throw std::invalid_argument("train: target must be unlabeled");
  if (config.weight_decay_grid.empty())
    throw std::invalid_argument("train: weight decay grid must be non-empty");

  const LossWeights& lw = config.loss_weights;
  const bool use_sdae = lw.lambda_item > 0.0 || lw.lambda_ir > 0.0;
  if (use_sdae && item_features.empty())
    throw std::invalid_argument("train: SDAE terms need item features");

  DsnDims dims = dims_template;
  dims.input_dim = source.features[0].dim;

  // 80/20 train/validation split, uniform by user (one example per user).
  std::vector<int> src_order(source.size());
  std::iota(src_order.begin(), src_order.end(), 0);
  Rng split_rng(config.seed * 0x9e3779b97f4a7c15ull + 1);
  std::shuffle(src_order.begin(), src_order.end(), split_rng.engine());
  const int n_train =
      std::max<int>(1, static_cast<int>(std::lround(
                        static_cast<double>(source.size()) * (1.0 - config.validation_fraction))));
  std::vector<int> train_idx(src_order.begin(), src_order.begin() + n_train);
  Dataset val;
  for (std::size_t i = static_cast<std::size_t>(n_train); i < src_order.size(); ++i) {
    val.features.push_back(source.features[static_cast<std::size_t>(src_order[i])]);
    val.labels.push_back(source.labels[static_cast<std::size_t>(src_order[i])]);
  }
  if (val.size() == 0) {  // degenerate tiny datasets: validate on train data
    val.features = source.features;
    val.labels = source.labels;
  }

  TrainResult result;
  result.selection = config.selection;

  // SDAE pretraining is shared across the weight-decay grid.
  SdaeModel pretrained;
  if (use_sdae) {
    SdaeTrainConfig stc;
    stc.epochs = config.sdae_pretrain_epochs;
    stc.batch_size = std::min<int>(config.batch_size, static_cast<int>(item_features.size()));
    stc.lr = config.lr;
    stc.seed = config.seed + 77;
    if (stc.epochs > 0) {
      SdaeTrainResult sr = train_sdae(item_features, sdae_cfg, stc);
      pretrained = std::move(sr.model);
      result.sdae_pretrain_loss = std::move(sr.epoch_loss);
    } else {
      Rng r(stc.seed);
      pretrained = SdaeModel::init(item_features[0].dim, sdae_cfg, r);
    }
  }

  const int num_labels = dims.num_labels;
  AdamConfig adam{config.lr, 0.9, 0.999, 1e-8};

  bool have_best_ce = false, have_best_ndcg = false;

  std::ofstream index;
  if (!checkpoint_dir.empty()) {
    std::filesystem::create_directories(checkpoint_dir);
    index.open(std::filesystem::path(checkpoint_dir) / "metrics_index.tsv");
    index << "step\tweight_decay\tce\tndcg@100\trecall@1\trecall@10\trecall@50\trecall@100\n";
  }

  for (double wd : config.weight_decay_grid) {
    Rng init_rng(config.seed);
    DsnModel model = DsnModel::init(dims, init_rng);
    SdaeModel sdae;
    if (use_sdae) sdae = pretrained;

    Rng rng(config.seed * 0x2545f4914f6cdd1dull + 99);
    std::vector<int> order = train_idx;
    std::vector<int> tgt_order(target.size());
    std::iota(tgt_order.begin(), tgt_order.end(), 0);
    std::size_t tgt_pos = tgt_order.size();  // forces a shuffle on first use
    long step = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng.engine());
      for (int start = 0; start < n_train; start += config.batch_size) {
        const int bs = std::min(config.batch_size, n_train - start);

        Batch src;
        src.inputs = gather_rows(source.features, order, start, bs);
        src.labels.resize(static_cast<std::size_t>(bs));
        for (int i = 0; i < bs; ++i)
          src.labels[static_cast<std::size_t>(i)] =
              source.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
        if (use_sdae) {
          std::vector<int> label_rows(src.labels.begin(), src.labels.end());
          src.label_item_features = gather_rows(item_features, label_rows, 0, bs);
        }

        Batch tgt;
        {
          std::vector<int> rows(static_cast<std::size_t>(bs));
          for (int i = 0; i < bs; ++i) {
            if (tgt_pos >= tgt_order.size()) {
              std::shuffle(tgt_order.begin(), tgt_order.end(), rng.engine());
              tgt_pos = 0;
            }
            rows[static_cast<std::size_t>(i)] = tgt_order[tgt_pos++];
          }
          tgt.inputs = gather_rows(target.features, rows, 0, bs);
        }

        std::vector<int> candidates;
        if (config.candidate_count > 0 && config.candidate_count < num_labels) {
          std::set<int> positives(src.labels.begin(), src.labels.end());
          const int s_eff =
              std::max(config.candidate_count, static_cast<int>(positives.size()));
          candidates = sample_candidates(num_labels, s_eff, positives, rng);
        } else if (config.candidate_count == num_labels) {
          candidates = sample_candidates(num_labels, config.candidate_count, {}, rng);
        }

        model.zero_grads();
        if (use_sdae) sdae.zero_grads();
        LossComponents comps =
            dsn_total_loss(model, use_sdae ? &sdae : nullptr, src, tgt, candidates,
                           lw, /*training=*/true, rng, /*accumulate_grads=*/true);
        result.task_loss_stream.push_back(comps.task);

        if (wd > 0.0)
          for (Param* p : model.weight_matrices()) p->grad += 2.0 * wd * p->value;

        ++step;
        for (Param* p : model.params()) adam_step(*p, step, adam);
        if (use_sdae && config.joint_sdae)
          for (Param* p : sdae.params()) adam_step(*p, step, adam);
      }

      // End-of-epoch checkpoint on the held-out validation split.
      CheckpointMetrics cm;
      cm.step = step;
      cm.epoch = epoch;
      cm.weight_decay = wd;
      cm.ce = dataset_cross_entropy(model, val);
      auto ranked = rank_dataset(model, val, std::min(100, num_labels));
      for (int k : {1, 10, 50, 100})
        cm.recall[k] = recall_at_k(ranked, val.labels, k);
      cm.ndcg100 = ndcg_at_k(ranked, val.labels, 100);
      result.trace.push_back(cm);

      if (index.is_open()) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "%ld\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\n", cm.step,
                      cm.weight_decay, cm.ce, cm.ndcg100, cm.recall[1], cm.recall[10],
                      cm.recall[50], cm.recall[100]);
        index << buf;
        save_dsn_model(model, (std::filesystem::path(checkpoint_dir) /
                               ("dsn_step" + std::to_string(cm.step) + ".txt"))
                                  .string());
        if (use_sdae)
          save_sdae_model(sdae, (std::filesystem::path(checkpoint_dir) /
                                 ("sdae_step" + std::to_string(cm.step) + ".txt"))
                                    .string());
      }

      if (!have_best_ce || cm.ce < result.best_ce.metrics.ce) {
        result.best_ce = Checkpoint{cm, model, sdae, use_sdae};
        have_best_ce = true;
      }
      if (!have_best_ndcg || cm.ndcg100 > result.best_ndcg.metrics.ndcg100) {
        result.best_ndcg = Checkpoint{cm, model, sdae, use_sdae};
        have_best_ndcg = true;
      }
    }
  }
  return result;
}

}  // namespace crossrec
