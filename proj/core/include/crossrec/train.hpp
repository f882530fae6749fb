#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "crossrec/dsn.hpp"
#include "crossrec/eval.hpp"
#include "crossrec/featurize.hpp"
#include "crossrec/sdae.hpp"

namespace crossrec {

enum class SelectionCriterion { kCrossEntropy, kNdcgAt100 };

struct TrainConfig {
  int epochs = 10;
  int batch_size = 128;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  LossWeights loss_weights;
  int candidate_count = 0;  // sampled-softmax size S; 0 means full softmax
  std::vector<double> weight_decay_grid = {1e-3};
  SelectionCriterion selection = SelectionCriterion::kNdcgAt100;
  bool joint_sdae = true;        // keep updating the SDAE during DSN training
  int sdae_pretrain_epochs = 5;  // 0 disables pretraining
  double validation_fraction = 0.2;
};

// Batch positives united with a uniform sample (without replacement) of
// the remaining labels, returned sorted. S = L degenerates to the full
// label set.
std::vector<int> sample_candidates(int num_labels, int sample_size,
                                   const std::set<int>& batch_labels, Rng& rng);

struct CheckpointMetrics {
  long step = 0;
  int epoch = 0;
  double weight_decay = 0.0;
  double ce = 0.0;  // mean validation cross-entropy
  std::map<int, double> recall;
  double ndcg100 = 0.0;
};

struct Checkpoint {
  CheckpointMetrics metrics;
  DsnModel model;
  SdaeModel sdae;
  bool has_sdae = false;
};

// Index of the best checkpoint: min CE or max nDCG@100, ties earliest step.
std::size_t select_model(const std::vector<CheckpointMetrics>& checkpoints,
                         SelectionCriterion criterion);

struct TrainResult {
  Checkpoint best_ce;    // min validation cross-entropy over grid x epochs
  Checkpoint best_ndcg;  // max validation nDCG@100
  SelectionCriterion selection = SelectionCriterion::kNdcgAt100;
  std::vector<CheckpointMetrics> trace;
  std::vector<double> task_loss_stream;  // per-step L_task
  std::vector<double> sdae_pretrain_loss;

  const Checkpoint& best() const {
    return selection == SelectionCriterion::kCrossEntropy ? best_ce : best_ndcg;
  }
};

// Mini-batch training over one labeled source and one unlabeled target
// dataset. `item_features[k]` is the feature vector of label item k (used
// by the SDAE terms; may be empty when both lambdas are zero). When
// `checkpoint_dir` is non-empty, per-epoch snapshots and a metrics index
// are written there.
TrainResult train(const Dataset& source, const Dataset& target,
                  const std::vector<SparseVec>& item_features,
                  const DsnDims& dims_template, const SdaeConfig& sdae_cfg,
                  const TrainConfig& config, const std::string& checkpoint_dir = "");

// Full-catalog ranked lists for a labeled dataset under a model snapshot.
std::vector<std::vector<int>> rank_dataset(const DsnModel& model,
                                           const Dataset& data, int k);

// Mean full-softmax cross-entropy of a labeled dataset at inference.
double dataset_cross_entropy(const DsnModel& model, const Dataset& data);

}  // namespace crossrec
