// Microbenchmarks for the hot paths: core tensor ops, the sequence encoder,
// bilinear pooling, whole-head forwards, the backward sweep, and metric
// aggregation. Sizes mirror the default model configuration.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dialrank/encoders.hpp"
#include "dialrank/fusion.hpp"
#include "dialrank/image_only_head.hpp"
#include "dialrank/metrics.hpp"
#include "dialrank/models.hpp"
#include "dialrank/synth_data.hpp"
#include "dialrank/tensor.hpp"
#include "dialrank/training.hpp"

using namespace dialrank;

namespace {

Tensor rnd(std::mt19937_64& rng, std::vector<std::size_t> shape, bool requires_grad = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t n = 1;
  for (const std::size_t d : shape) n *= d;
  std::vector<double> data(n);
  for (auto& v : data) v = u(rng);
  return Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

struct Fixture {
  Dataset data;
  DialogTokens toks;
  Model image_only, joint, fused;

  Fixture() {
    DatasetConfig dc;
    dc.n_examples = 8;
    dc.train_ratio = 0.5;
    dc.val_ratio = 0.5;
    dc.seed = 7;
    data = generate(dc);
    toks = to_dialog_tokens(data.examples[0]);

    ModelConfig mc;
    mc.vocab_size = data.vocab.size();
    mc.feature_dim = dc.feature_dim;
    image_only = build_model(ModelKind::image_only, mc, 3);
    joint = build_model(ModelKind::joint, mc, 3);
    fused = build_model(ModelKind::consensus_dropout, mc, 3);
  }

  const Tensor& features() const { return data.examples[0].image_features; }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void bm_matmul(benchmark::State& state) {
  NoGradGuard guard;
  std::mt19937_64 rng(1);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Tensor a = rnd(rng, {n, n});
  const Tensor b = rnd(rng, {n, n});
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.data().data());
  }
}
BENCHMARK(bm_matmul)->Arg(16)->Arg(32)->Arg(64);

void bm_lstm_step(benchmark::State& state) {
  NoGradGuard guard;
  std::mt19937_64 rng(2);
  const std::size_t h = 32, e = 16;
  LstmParams cell{rnd(rng, {4 * h, e}), rnd(rng, {4 * h, h}), rnd(rng, {4 * h})};
  const Tensor x = rnd(rng, {e});
  const LstmState prev{rnd(rng, {h}), rnd(rng, {h})};
  for (auto _ : state) {
    LstmState next = lstm_step(x, prev, cell);
    benchmark::DoNotOptimize(next.h.data().data());
  }
}
BENCHMARK(bm_lstm_step);

void bm_encode_sequence(benchmark::State& state) {
  NoGradGuard guard;
  std::mt19937_64 rng(3);
  const std::size_t h = 32, e = 16, vocab = 64;
  LstmParams cell{rnd(rng, {4 * h, e}), rnd(rng, {4 * h, h}), rnd(rng, {4 * h})};
  const Tensor table = rnd(rng, {vocab, e});
  TokenIds tokens;
  for (std::size_t i = 0; i < 12; ++i) tokens.push_back(2 + i % (vocab - 2));
  for (auto _ : state) {
    Tensor enc = encode_sequence(tokens, cell, table);
    benchmark::DoNotOptimize(enc.data().data());
  }
}
BENCHMARK(bm_encode_sequence);

void bm_bilinear_pool(benchmark::State& state) {
  NoGradGuard guard;
  std::mt19937_64 rng(4);
  const std::size_t k = 6, d_x = 96, d_q = 32, m = 2, d_m = 64;
  MfbParams p;
  for (std::size_t i = 0; i < m; ++i) {
    p.factors_x.push_back(rnd(rng, {d_m, d_x}));
    p.factors_q.push_back(rnd(rng, {d_m, d_q}));
  }
  p.attn_proj = rnd(rng, {1, d_m});
  const Tensor items = rnd(rng, {k, d_x});
  const Tensor query = rnd(rng, {d_q});
  for (auto _ : state) {
    Tensor z = mfb(items, query, p);
    benchmark::DoNotOptimize(z.data().data());
  }
}
BENCHMARK(bm_bilinear_pool);

void bm_image_only_forward(benchmark::State& state) {
  Fixture& f = fixture();
  NoGradGuard guard;
  for (auto _ : state) {
    Tensor scores = image_only_scores(f.image_only, f.toks, f.features(), 3);
    benchmark::DoNotOptimize(scores.data().data());
  }
}
BENCHMARK(bm_image_only_forward);

void bm_joint_forward(benchmark::State& state) {
  Fixture& f = fixture();
  NoGradGuard guard;
  for (auto _ : state) {
    Tensor scores = joint_scores(f.joint, f.toks, f.features(), 3);
    benchmark::DoNotOptimize(scores.data().data());
  }
}
BENCHMARK(bm_joint_forward);

void bm_fused_forward_backward(benchmark::State& state) {
  Fixture& f = fixture();
  const std::size_t gt = f.data.examples[0].rounds[2].gt_index;
  for (auto _ : state) {
    Tape::global().clear();
    f.fused.params.zero_grads();
    Tensor loss = cross_entropy(consensus_scores(f.fused, f.toks, f.features(), 3).fused, gt);
    backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
  Tape::global().clear();
}
BENCHMARK(bm_fused_forward_backward);

void bm_score_dataset(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    DatasetScores scores = score_dataset(f.joint, f.data);
    benchmark::DoNotOptimize(scores.primary().rows.size());
  }
}
BENCHMARK(bm_score_dataset);

void bm_evaluate_metrics(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RankedInstance> instances;
  for (std::size_t i = 0; i < 1000; ++i) {
    RankedInstance inst;
    inst.example_id = i;
    inst.round = 1;
    inst.scores.resize(20);
    for (auto& v : inst.scores) v = u(rng);
    inst.gt_index = i % 20;
    std::vector<double> rel(20, 0.0);
    rel[inst.gt_index] = 1.0;
    rel[(inst.gt_index + 1) % 20] = 0.5;
    inst.dense_relevance = std::move(rel);
    instances.push_back(std::move(inst));
  }
  for (auto _ : state) {
    MetricReport report = evaluate(instances);
    benchmark::DoNotOptimize(report.ndcg);
  }
}
BENCHMARK(bm_evaluate_metrics);

void bm_ensemble_merge(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<LogitMatrix> models(4);
  for (auto& m : models) {
    m.candidate_count = 20;
    for (std::size_t i = 0; i < 500; ++i) {
      LogitRow row{i / 5, i % 5 + 1, {}};
      for (std::size_t j = 0; j < 20; ++j) row.scores.push_back(u(rng));
      m.rows.push_back(std::move(row));
    }
  }
  for (auto _ : state) {
    EnsembleRanking merged = ensemble(models);
    benchmark::DoNotOptimize(merged.summed.size());
  }
}
BENCHMARK(bm_ensemble_merge);

}  // namespace

BENCHMARK_MAIN();
