// Microbenchmarks for the hot paths: MLP forward/backward, the full
// objective, top-K ranking, and TF-IDF vectorization.

#include <benchmark/benchmark.h>

#include "crossrec/dsn.hpp"
#include "crossrec/eval.hpp"
#include "crossrec/featurize.hpp"
#include "crossrec/sdae.hpp"

namespace {

using namespace crossrec;

DsnDims bench_dims() {
  DsnDims d;
  d.input_dim = 600;
  d.num_labels = 200;
  d.code_dim = 32;
  d.user_dim = 32;
  d.encoder_hidden = {64, 32};
  d.decoder_hidden = {32, 64};
  d.classifier_hidden = {64};
  d.disc_hidden = {64};
  return d;
}

void BM_MlpForward(benchmark::State& state) {
  Rng rng(1);
  const int batch = static_cast<int>(state.range(0));
  Mlp net(600, {{256, Activation::kElu, 0.0},
                {128, Activation::kElu, 0.0},
                {64, Activation::kElu, 0.0}}, rng);
  Matrix x = he_init(600, batch, 600, rng);
  for (auto _ : state) {
    Matrix y = net.forward(x, false, rng);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForward)->Arg(32)->Arg(128);

void BM_MlpForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const int batch = static_cast<int>(state.range(0));
  Mlp net(600, {{256, Activation::kElu, 0.5},
                {128, Activation::kElu, 0.5},
                {64, Activation::kElu, 0.5}}, rng);
  Matrix x = he_init(600, batch, 600, rng);
  Matrix dy = he_init(64, batch, 64, rng);
  for (auto _ : state) {
    MlpCache cache;
    Matrix y = net.forward(x, true, rng, &cache);
    Matrix dx = net.backward(cache, dy);
    benchmark::DoNotOptimize(dx.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(32)->Arg(128);

void BM_DsnObjectiveStep(benchmark::State& state) {
  Rng rng(3);
  const int batch = static_cast<int>(state.range(0));
  DsnDims dims = bench_dims();
  DsnModel model = DsnModel::init(dims, rng);
  SdaeConfig scfg;
  scfg.hidden_dim = 64;
  scfg.code_dim = dims.user_dim;
  SdaeModel sdae = SdaeModel::init(300, scfg, rng);

  Batch src, tgt;
  src.inputs = he_init(dims.input_dim, batch, dims.input_dim, rng);
  tgt.inputs = he_init(dims.input_dim, batch, dims.input_dim, rng);
  src.label_item_features = he_init(300, batch, 300, rng).cwiseAbs();
  for (int i = 0; i < batch; ++i)
    src.labels.push_back(static_cast<int>(rng.below(dims.num_labels)));
  LossWeights w;
  for (auto _ : state) {
    model.zero_grads();
    sdae.zero_grads();
    LossComponents c =
        dsn_total_loss(model, &sdae, src, tgt, {}, w, true, rng, true);
    benchmark::DoNotOptimize(c.total(w));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DsnObjectiveStep)->Arg(32)->Arg(128);

void BM_RankTopK(benchmark::State& state) {
  Rng rng(4);
  const int L = static_cast<int>(state.range(0));
  Vector scores(L);
  for (int i = 0; i < L; ++i) scores[i] = rng.normal(0.0, 1.0);
  for (auto _ : state) {
    auto top = rank_topk(scores, 100);
    benchmark::DoNotOptimize(top.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RankTopK)->Arg(200)->Arg(10000);

void BM_VectorizeText(benchmark::State& state) {
  Rng rng(5);
  std::vector<std::vector<std::string>> docs;
  for (int d = 0; d < 500; ++d) {
    std::vector<std::string> doc;
    for (int t = 0; t < 40; ++t)
      doc.push_back("w" + std::to_string(rng.below(1000)));
    docs.push_back(std::move(doc));
  }
  Vocabulary vocab = build_vocabulary(docs, 600);
  std::size_t i = 0;
  for (auto _ : state) {
    SparseVec v = vectorize_text(docs[i++ % docs.size()], vocab);
    benchmark::DoNotOptimize(v.entries.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_VectorizeText);

}  // namespace

BENCHMARK_MAIN();
