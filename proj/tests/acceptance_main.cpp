// Acceptance gate: one binary that exercises every release criterion end to
// end and prints exactly one [PASS]/[FAIL] line per criterion, with the
// supporting numbers indented underneath. The exit code is the number of
// failed criteria, so `ctest` treats any red line as a test failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialrank/encoders.hpp"
#include "dialrank/fusion.hpp"
#include "dialrank/image_only_head.hpp"
#include "dialrank/joint_head.hpp"
#include "dialrank/metrics.hpp"
#include "dialrank/models.hpp"
#include "dialrank/synth_data.hpp"
#include "dialrank/tensor.hpp"
#include "dialrank/training.hpp"

#include "factories.hpp"
#include "gradcheck.hpp"
#include "reference_metrics.hpp"
#include "test_util.hpp"

using namespace dialrank;
using nlohmann::json;

namespace {

// ---- pinned tolerances and budgets ----
constexpr double kGradTol = 1e-4;         // FD relative error bound
constexpr double kGradBudgetSec = 60.0;   // wall budget for the gradient sweep
// Step for the whole-model central difference. The signed-sqrt pooling has
// unbounded curvature near zero, so h=1e-5 is truncation-limited there (the
// error scales as h^2: ~7e-4 at 1e-5, ~7e-6 at 1e-6, rising again from
// cancellation at 1e-7); 1e-6 sits in the flat part of that curve.
constexpr double kModelFdStep = 1e-6;
constexpr double kMfbTol = 1e-10;         // bilinear pooling vs. loop oracle
constexpr double kNormTol = 1e-10;        // unit-row-norm slack
constexpr double kMaskTol = 0.01;         // dropout rate / mean window
constexpr double kMetricTol = 1e-12;      // two metric implementations
constexpr double kMeanRankSlack = 0.5;    // around (C+1)/2 on random scores
constexpr double kOverfitTarget = 0.9;    // train-split R@1 to reach
constexpr std::size_t kOverfitEpochs = 200;
constexpr double kOverfitBudgetSec = 300.0;  // per configuration
constexpr double kGapMin = 0.10;   // joint over image-only on history questions
constexpr double kSameMax = 0.05;  // allowed spread on image-only questions
constexpr double kEnsembleSlack = 0.02;
constexpr std::size_t kSignalSeeds = 5;

double now_sec() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string f3(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.3f", v);
  return b;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double r1_of(const std::vector<RankedInstance>& inst, const std::vector<char>* mask = nullptr,
             char want = 0) {
  std::size_t n = 0, hit = 0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    if (mask && (*mask)[i] != want) continue;
    ++n;
    hit += rank_of(inst[i].scores, inst[i].gt_index) == 1 ? 1 : 0;
  }
  return n == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(n);
}

// ---- shared trained models for the behavioral criteria ----

struct SeedRun {
  std::string img_logits_path, joint_logits_path;
  LogitMatrix img_m, joint_m;
  std::vector<RankedInstance> img_inst, joint_inst;
  double img_all = 0, joint_all = 0;      // val R@1
  double img_hist = 0, joint_hist = 0;    // R@1 on history-dependent rounds
  double img_plain = 0, joint_plain = 0;  // R@1 on image-answerable rounds
  double joint_h0 = 0;                    // caption-only history ablation
};

struct TrainedContext {
  bool attempted = false;
  std::string error;
  testutil::TempDir dir{"acc-models"};
  Dataset train_split, val_split;
  std::vector<Annotation> val_ann;
  std::string ann_path;
  std::vector<char> hist_mask;  // 1 = needs history, aligned with val instances
  std::vector<SeedRun> runs;
  double seconds = 0.0;
};

// Trains image-only + joint pairs for kSignalSeeds seeds on one generated
// dataset; later criteria reuse the cached logits and reports.
//
// Training protocol: the reference-resolution circuit (find the object whose
// color matches a color word that only ever appears in dialog history) gets
// gradient only from the history-dependent rounds, so it trains in two stages.
// Stage one fits the image-only model, whose question->object attention and
// attribute readout train directly from the image-answerable rounds. Stage two
// starts the joint model from that trunk (embeddings, sequence encoders,
// visual projection — copied by parameter name) and trains its fusion head on
// top. Both stages use warm restarts: the learning-rate schedule decays to
// nothing within ~12 epochs, so each stage reruns the schedule kCycles times
// from its latest weights. Scores come from the final weights.
TrainedContext& trained() {
  static TrainedContext ctx;
  if (ctx.attempted) return ctx;
  ctx.attempted = true;
  const double t0 = now_sec();
  try {
    DatasetConfig dc;
    dc.n_examples = 600;
    dc.train_ratio = 2.0 / 3.0;
    dc.val_ratio = 1.0 - dc.train_ratio;
    dc.rounds = 2;
    dc.candidates = 20;
    dc.objects = 6;
    dc.feature_dim = 48;
    dc.history_fraction = 0.40;
    dc.noise_sigma = 0.05;
    dc.seed = 42;
    const Dataset full = generate(dc);
    auto split = split_dataset(full, dc.train_ratio);
    ctx.train_split = std::move(split.first);
    ctx.val_split = std::move(split.second);
    ctx.val_ann = annotations_from(ctx.val_split);
    ctx.ann_path = ctx.dir.file("val.annotations");
    save_annotations_file(ctx.val_ann, ctx.ann_path);
    for (const auto& ex : ctx.val_split.examples)
      for (const auto& round : ex.rounds)
        ctx.hist_mask.push_back(round.kind == QuestionKind::pronoun_size ? 1 : 0);

    ModelConfig mc;
    mc.vocab_size = ctx.train_split.vocab.size();
    mc.embed_dim = 12;
    mc.hidden_dim = 64;
    mc.factor_count = 2;
    mc.fused_dim = 128;
    mc.feature_dim = dc.feature_dim;

    constexpr std::size_t kCycles = 6;
    auto fit = [&](Model& model, std::uint64_t train_seed) {
      for (std::size_t cycle = 0; cycle < kCycles; ++cycle) {
        TrainConfig tc;
        tc.epochs = 8;  // the schedule's plateau; restarts cover the rest
        tc.batch_examples = 1;
        tc.seed = train_seed + 1000 * cycle;
        train(model, ctx.train_split, ctx.val_split, tc);
      }
    };
    auto score_to_file = [&](const Model& model, const std::string& path) {
      LogitMatrix m = score_dataset(model, ctx.val_split).primary();
      m.save_file(path);
      return m;
    };

    for (std::size_t seed = 1; seed <= kSignalSeeds; ++seed) {
      SeedRun run;
      Model img = build_model(ModelKind::image_only, mc, 50 + seed);
      fit(img, 50 + seed);

      Model joint = build_model(ModelKind::joint, mc, seed);
      for (const auto& [name, tensor] : img.params.entries())
        if (joint.params.contains(name)) {
          Tensor dst = joint.params.get(name);
          dst.data() = tensor.data();
        }
      fit(joint, seed);

      run.img_logits_path = ctx.dir.file("image-" + std::to_string(seed) + ".logits");
      run.joint_logits_path = ctx.dir.file("joint-" + std::to_string(seed) + ".logits");
      run.img_m = score_to_file(img, run.img_logits_path);
      run.joint_m = score_to_file(joint, run.joint_logits_path);
      run.joint_inst = join_instances(run.joint_m, ctx.val_ann);
      run.img_inst = join_instances(run.img_m, ctx.val_ann);
      run.joint_all = r1_of(run.joint_inst);
      run.img_all = r1_of(run.img_inst);
      run.joint_hist = r1_of(run.joint_inst, &ctx.hist_mask, 1);
      run.img_hist = r1_of(run.img_inst, &ctx.hist_mask, 1);
      run.joint_plain = r1_of(run.joint_inst, &ctx.hist_mask, 0);
      run.img_plain = r1_of(run.img_inst, &ctx.hist_mask, 0);

      const DatasetScores h0 = score_dataset(joint, ctx.val_split, 0);
      run.joint_h0 = r1_of(join_instances(h0.primary(), ctx.val_ann));
      ctx.runs.push_back(std::move(run));
    }
  } catch (const std::exception& e) {
    ctx.error = e.what();
  }
  ctx.seconds = now_sec() - t0;
  return ctx;
}

// ---- criteria ----

bool crit_gradients(std::ostringstream& out) {
  const double t0 = now_sec();

  DatasetConfig dc;
  dc.n_examples = 2;
  dc.train_ratio = 0.5;
  dc.val_ratio = 0.5;
  dc.rounds = 2;      // r = 2
  dc.candidates = 5;  // C = 5
  dc.objects = 3;     // k = 3
  dc.feature_dim = 4;
  dc.history_fraction = 0.5;
  dc.seed = 904;
  const Dataset data = generate(dc);
  const DialogExample& ex = data.examples[0];
  const DialogTokens toks = to_dialog_tokens(ex);
  const std::size_t gt = ex.rounds[1].gt_index;

  ModelConfig mc;
  mc.vocab_size = data.vocab.size();
  mc.embed_dim = 3;
  mc.hidden_dim = 4;  // d = 4
  mc.factor_count = 2;
  mc.fused_dim = 6;
  mc.feature_dim = 4;

  double worst_ops = 0.0, worst_heads = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    worst_ops = std::max(worst_ops, testutil::op_gradient_battery(seed));

    Model model = build_model(ModelKind::consensus_dropout, mc, seed);
    Tensor features = Tensor::from_data({dc.objects, dc.feature_dim},
                                        ex.image_features.data(), true);
    std::vector<Tensor> params{features};
    for (const auto& [name, t] : model.params.entries()) params.push_back(t);
    const double err = testutil::max_grad_rel_err(
        params,
        [&] {
          // round 2's fused score path runs both heads over the full history
          return cross_entropy(consensus_scores(model, toks, features, 2).fused, gt);
        },
        kModelFdStep);
    worst_heads = std::max(worst_heads, err);
  }
  const double elapsed = now_sec() - t0;
  out << "      op battery worst rel err " << worst_ops << ", both-head pass worst " << worst_heads
      << " (bound " << kGradTol << "), " << f3(elapsed) << "s of " << kGradBudgetSec
      << "s budget\n";
  return worst_ops < kGradTol && worst_heads < kGradTol && elapsed < kGradBudgetSec;
}

bool crit_mfb_oracle(std::ostringstream& out) {
  NoGradGuard guard;
  std::mt19937_64 rng(77);
  double worst = 0.0, worst_norm = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::uniform_int_distribution<std::size_t> pick_m(1, 3), pick_k(1, 4), pick_dx(1, 5),
        pick_dq(1, 4), pick_dm(1, 6);
    const std::size_t m = pick_m(rng), k = pick_k(rng), d_x = pick_dx(rng), d_q = pick_dq(rng),
                      d_m = pick_dm(rng);
    const MfbParams p = testutil::rnd_mfb(rng, m, d_m, d_x, d_q);
    const Tensor items = testutil::rnd_tensor(rng, {k, d_x}, -1.2, 1.2);
    const Tensor query = testutil::rnd_tensor(rng, {d_q}, -1.2, 1.2);
    const Tensor z = mfb(items, query, p);
    const auto oracle = testutil::mfb_loop_oracle(items, query, p);
    for (std::size_t r = 0; r < k; ++r) {
      double norm = 0.0;
      for (std::size_t j = 0; j < d_m; ++j) {
        worst = std::max(worst, std::fabs(z.at(r, j) - oracle[r][j]));
        norm += z.at(r, j) * z.at(r, j);
      }
      norm = std::sqrt(norm);
      if (norm > 1e-12) worst_norm = std::max(worst_norm, std::fabs(norm - 1.0));
    }
  }
  out << "      worst entry diff " << worst << " (bound " << kMfbTol << "), worst row-norm drift "
      << worst_norm << "\n";
  return worst <= kMfbTol && worst_norm <= kNormTol;
}

bool crit_round_dropout(std::ostringstream& out) {
  std::mt19937_64 rng(3);
  const std::vector<std::pair<std::size_t, std::size_t>> law = {
      {1, 0}, {2, 0}, {3, 1}, {4, 2}, {5, 3}, {6, 3}, {10, 3}};
  bool law_ok = true;
  for (const auto& [available, expected] : law) {
    const RoundDropoutPlan plan = round_dropout(available, available, rng);
    if (plan.drop_count != expected) {
      out << "      available " << available << " dropped " << plan.drop_count << ", expected "
          << expected << "\n";
      law_ok = false;
    }
  }
  bool caption_safe = true, well_formed = true;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t available = 1 + static_cast<std::size_t>(i) % 10;
    const RoundDropoutPlan plan = round_dropout(available, available, rng);
    if (plan.dropped.size() != plan.drop_count) well_formed = false;
    for (std::size_t j = 0; j < plan.dropped.size(); ++j) {
      if (plan.dropped[j] == 0) caption_safe = false;  // caption row is index 0
      if (plan.dropped[j] >= available) well_formed = false;
      if (j > 0 && plan.dropped[j] <= plan.dropped[j - 1]) well_formed = false;
    }
  }
  out << "      drop-count law " << (law_ok ? "exact" : "BROKEN") << "; caption "
      << (caption_safe ? "never dropped" : "DROPPED") << " in 10^4 plans\n";
  return law_ok && caption_safe && well_formed;
}

bool crit_instance_dropout(std::ostringstream& out) {
  std::mt19937_64 rng(8);
  bool ok = true;
  for (const double p : {0.15, 0.25, 0.35}) {
    const auto mask = instance_dropout_mask(100000, p, rng);
    const double keep = 1.0 / (1.0 - p);
    std::size_t zeros = 0;
    double mean = 0.0;
    bool two_valued = true;
    for (const double v : mask) {
      if (v == 0.0)
        ++zeros;
      else if (v != keep)
        two_valued = false;
      mean += v;
    }
    mean /= static_cast<double>(mask.size());
    const double rate = static_cast<double>(zeros) / static_cast<double>(mask.size());
    out << "      p=" << p << ": drop rate " << f3(rate) << ", mask mean " << f3(mean) << "\n";
    ok = ok && two_valued && std::fabs(rate - p) <= kMaskTol && std::fabs(mean - 1.0) <= kMaskTol;
  }

  // aligned random image / joint logit matrices
  auto random_matrix = [&](std::size_t rows, std::size_t c) {
    LogitMatrix m;
    m.candidate_count = c;
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (std::size_t i = 0; i < rows; ++i) {
      LogitRow row{i / 3, i % 3 + 1, {}};
      for (std::size_t j = 0; j < c; ++j) row.scores.push_back(u(rng));
      m.rows.push_back(std::move(row));
    }
    return m;
  };
  const LogitMatrix image = random_matrix(42, 7);
  const LogitMatrix joint = random_matrix(42, 7);

  const LogitMatrix kept = instance_dropout(joint, 0.0, rng);
  bool identity = kept.rows.size() == joint.rows.size();
  for (std::size_t i = 0; identity && i < kept.rows.size(); ++i)
    identity = kept.rows[i].scores == joint.rows[i].scores;

  const LogitMatrix dropped = instance_dropout(joint, 0.4, rng);
  const LogitMatrix fused = consensus(image, dropped);
  std::size_t dropped_rows = 0;
  bool dropped_is_image = true;
  for (std::size_t i = 0; i < dropped.rows.size(); ++i) {
    const bool zero = std::all_of(dropped.rows[i].scores.begin(), dropped.rows[i].scores.end(),
                                  [](double v) { return v == 0.0; });
    if (!zero) continue;
    ++dropped_rows;
    if (fused.rows[i].scores != image.rows[i].scores) dropped_is_image = false;
  }
  out << "      p=0 identity " << (identity ? "exact" : "BROKEN") << "; " << dropped_rows
      << " dropped rows all equal the image-only logits bitwise: "
      << (dropped_is_image ? "yes" : "NO") << "\n";
  return ok && identity && dropped_rows >= 1 && dropped_is_image;
}

bool crit_metric_oracle(std::ostringstream& out) {
  std::mt19937_64 rng(501);
  std::vector<RankedInstance> instances;
  double worst_rank = 0.0, worst_ndcg = 0.0;
  double ref_ndcg_sum = 0.0;
  std::size_t ndcg_count = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    RankedInstance inst;
    inst.example_id = i;
    inst.round = 1;
    std::uniform_int_distribution<std::size_t> pick_c(5, 20);
    const std::size_t c = pick_c(rng);
    std::uniform_int_distribution<int> palette(0, 6);
    for (std::size_t j = 0; j < c; ++j)
      inst.scores.push_back(0.5 * static_cast<double>(palette(rng)));  // deliberate ties
    inst.gt_index = rng() % c;
    if (i % 5 != 0) {  // 800 instances carry dense relevance
      std::vector<double> rel(c, 0.0);
      rel[inst.gt_index] = 1.0;
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (std::size_t j = 0; j < c; ++j)
        if (j != inst.gt_index && u(rng) < 0.3) rel[j] = 0.2 * (1 + rng() % 4);
      inst.dense_relevance = std::move(rel);
    }
    const std::size_t lib_rank = rank_of(inst.scores, inst.gt_index);
    const std::size_t ref_rank = refmetrics::rank_of(inst.scores, inst.gt_index);
    worst_rank = std::max(worst_rank,
                          std::fabs(static_cast<double>(lib_rank) - static_cast<double>(ref_rank)));
    if (inst.dense_relevance) {
      const double a = ndcg(inst);
      const double b = refmetrics::ndcg(inst.scores, *inst.dense_relevance);
      worst_ndcg = std::max(worst_ndcg, std::fabs(a - b));
      ref_ndcg_sum += b;
      ++ndcg_count;
    }
    instances.push_back(std::move(inst));
  }
  std::vector<std::size_t> ranks;
  for (const auto& inst : instances) ranks.push_back(refmetrics::rank_of(inst.scores, inst.gt_index));
  const MetricReport lib = evaluate(instances);
  const double d_mrr = std::fabs(lib.mrr - refmetrics::mrr(ranks));
  const double d_r1 = std::fabs(lib.r_at_1 - refmetrics::recall_at(ranks, 1));
  const double d_r5 = std::fabs(lib.r_at_5 - refmetrics::recall_at(ranks, 5));
  const double d_r10 = std::fabs(lib.r_at_10 - refmetrics::recall_at(ranks, 10));
  const double d_mean = std::fabs(lib.mean_rank - refmetrics::mean_rank(ranks));
  const double d_ndcg = std::fabs(lib.ndcg - ref_ndcg_sum / static_cast<double>(ndcg_count));
  const double worst_agg = std::max({d_mrr, d_r1, d_r5, d_r10, d_mean, d_ndcg});
  out << "      1000 instances: rank mismatches " << worst_rank << ", worst ndcg diff "
      << worst_ndcg << ", worst aggregate diff " << worst_agg << " (bound " << kMetricTol << ")\n";

  // chance-level mean rank on continuous random scores
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double rank_sum = 0.0;
  const std::size_t chance_n = 4000;
  for (std::size_t i = 0; i < chance_n; ++i) {
    std::vector<double> scores(20);
    for (auto& v : scores) v = u(rng);
    rank_sum += static_cast<double>(rank_of(scores, i % 20));
  }
  const double chance_mean = rank_sum / static_cast<double>(chance_n);
  out << "      random-score mean rank " << f3(chance_mean) << " vs 10.5 +/- " << kMeanRankSlack
      << " over " << chance_n << " rows\n";
  return worst_rank == 0.0 && worst_ndcg <= kMetricTol && worst_agg <= kMetricTol &&
         std::fabs(chance_mean - 10.5) <= kMeanRankSlack;
}

bool crit_overfit(std::ostringstream& out) {
  DatasetConfig dc;
  dc.n_examples = 20;
  dc.train_ratio = 0.5;
  dc.val_ratio = 0.5;
  dc.rounds = 2;
  dc.candidates = 5;
  dc.objects = 4;
  dc.feature_dim = 12;
  dc.history_fraction = 0.2;
  dc.noise_sigma = 0.05;
  dc.seed = 31;
  const Dataset data = generate(dc);

  ModelConfig mc;
  mc.vocab_size = data.vocab.size();
  mc.embed_dim = 20;
  mc.hidden_dim = 80;
  mc.factor_count = 2;
  mc.fused_dim = 160;
  mc.feature_dim = dc.feature_dim;

  bool all_ok = true;
  for (const ModelKind kind :
       {ModelKind::image_only, ModelKind::joint, ModelKind::consensus_dropout}) {
    const double t0 = now_sec();
    Model model = build_model(kind, mc, 9);
    TrainConfig tc;
    // 40 epochs spans the live part of the lr schedule twice over; the pass
    // condition still checks against the kOverfitEpochs ceiling.
    tc.epochs = 40;
    tc.batch_examples = 1;
    tc.seed = 9;
    // memorization-capability check: regularizers off
    tc.round_dropout = false;
    tc.instance_dropout_p = 0.0;
    // the whole dataset is both train and eval split: val metrics = train metrics
    const TrainResult result = train(model, data, data, tc);
    std::size_t reached = 0;
    for (const auto& rec : result.history)
      if (rec.val.r_at_1 >= kOverfitTarget) {
        reached = rec.epoch;
        break;
      }
    const double elapsed = now_sec() - t0;
    out << "      " << to_string(kind) << ": train R@1 >= " << kOverfitTarget
        << (reached ? " at epoch " + std::to_string(reached) : " never reached") << ", best "
        << f3(result.best_val.r_at_1) << ", " << f3(elapsed) << "s\n";
    all_ok = all_ok && reached != 0 && reached <= kOverfitEpochs && elapsed < kOverfitBudgetSec;
  }
  return all_ok;
}

bool crit_signal_direction(std::ostringstream& out) {
  TrainedContext& ctx = trained();
  if (!ctx.error.empty()) {
    out << "      training failed: " << ctx.error << "\n";
    return false;
  }
  out << "      " << kSignalSeeds << " seed pairs trained in " << f3(ctx.seconds) << "s; "
      << "val history rounds: "
      << std::count(ctx.hist_mask.begin(), ctx.hist_mask.end(), static_cast<char>(1)) << " of "
      << ctx.hist_mask.size() << "\n";
  std::vector<double> gaps, plain_diffs, h0s, fulls;
  for (std::size_t s = 0; s < ctx.runs.size(); ++s) {
    const SeedRun& r = ctx.runs[s];
    out << "      seed " << s + 1 << ": joint hist " << f3(r.joint_hist) << " img hist "
        << f3(r.img_hist) << " | joint plain " << f3(r.joint_plain) << " img plain "
        << f3(r.img_plain) << " | joint full " << f3(r.joint_all) << " H-0 " << f3(r.joint_h0)
        << "\n";
    gaps.push_back(r.joint_hist - r.img_hist);
    plain_diffs.push_back(std::fabs(r.joint_plain - r.img_plain));
    h0s.push_back(r.joint_h0);
    fulls.push_back(r.joint_all);
  }
  const double gap_med = median(gaps);
  const double plain_med = median(plain_diffs);
  const double h0_med = median(h0s), full_med = median(fulls);
  out << "      median history gap " << f3(gap_med) << " (need >= " << kGapMin
      << "), median plain spread " << f3(plain_med) << " (allow <= " << kSameMax
      << "), median H-0 " << f3(h0_med) << " <= FULL " << f3(full_med) << "\n";
  return gap_med >= kGapMin && plain_med <= kSameMax && h0_med <= full_med;
}

bool crit_complementarity(std::ostringstream& out) {
  TrainedContext& ctx = trained();
  if (!ctx.error.empty()) {
    out << "      training failed: " << ctx.error << "\n";
    return false;
  }
  bool ok = true;
  for (std::size_t s = 0; s < ctx.runs.size(); ++s) {
    const SeedRun& r = ctx.runs[s];
    const ComplementarityReport rep = complementarity(r.joint_inst, r.img_inst);
    // direction-aware strictness: each one-sided disagreement forces one
    // strict inequality pair
    std::size_t a_only = 0, b_only = 0;
    for (std::size_t i = 0; i < r.joint_inst.size(); ++i) {
      const bool a = rank_of(r.joint_inst[i].scores, r.joint_inst[i].gt_index) == 1;
      const bool b = rank_of(r.img_inst[i].scores, r.img_inst[i].gt_index) == 1;
      a_only += a && !b ? 1 : 0;
      b_only += b && !a ? 1 : 0;
    }
    bool seed_ok = rep.r1_intersection <= std::min(rep.r1_a, rep.r1_b) + kMetricTol &&
                   rep.r1_union >= std::max(rep.r1_a, rep.r1_b) - kMetricTol &&
                   rep.ndcg_intersection <= std::min(rep.ndcg_a, rep.ndcg_b) + kMetricTol &&
                   rep.ndcg_union >= std::max(rep.ndcg_a, rep.ndcg_b) - kMetricTol;
    if (a_only > 0) seed_ok = seed_ok && rep.r1_intersection < rep.r1_a && rep.r1_union > rep.r1_b;
    if (b_only > 0) seed_ok = seed_ok && rep.r1_intersection < rep.r1_b && rep.r1_union > rep.r1_a;
    if (s == 0 || !seed_ok)
      out << "      seed " << s + 1 << ": R@1 a=" << f3(rep.r1_a) << " b=" << f3(rep.r1_b)
          << " int=" << f3(rep.r1_intersection) << " uni=" << f3(rep.r1_union) << " (a-only "
          << a_only << ", b-only " << b_only << ") " << (seed_ok ? "ok" : "BROKEN") << "\n";
    ok = ok && seed_ok;
  }

  // the CLI must emit the same four-value table
  const SeedRun& r0 = ctx.runs[0];
  const testutil::RunResult cli = testutil::run_command(
      std::string(DIALRANK_BIN) + " eval --logits " + r0.joint_logits_path + " --compare " +
          r0.img_logits_path + " --annotations " + ctx.ann_path,
      ctx.dir);
  bool cli_ok = cli.exit_code == 0;
  if (cli_ok) {
    const ComplementarityReport rep = complementarity(r0.joint_inst, r0.img_inst);
    const json j = json::parse(testutil::last_line(cli.out));
    cli_ok = j.at("r1_a").get<double>() == rep.r1_a && j.at("r1_b").get<double>() == rep.r1_b &&
             j.at("r1_intersection").get<double>() == rep.r1_intersection &&
             j.at("r1_union").get<double>() == rep.r1_union &&
             j.at("ndcg_a").get<double>() == rep.ndcg_a &&
             j.at("ndcg_b").get<double>() == rep.ndcg_b &&
             j.at("ndcg_intersection").get<double>() == rep.ndcg_intersection &&
             j.at("ndcg_union").get<double>() == rep.ndcg_union;
  }
  out << "      cli overlap table " << (cli_ok ? "matches the library exactly" : "DISAGREES")
      << "\n";
  return ok && cli_ok;
}

bool crit_ensemble_identities(std::ostringstream& out) {
  TrainedContext& ctx = trained();
  if (!ctx.error.empty()) {
    out << "      training failed: " << ctx.error << "\n";
    return false;
  }
  const LogitMatrix& x = ctx.runs[0].joint_m;

  // ensemble of one model reproduces that model's ranking
  const EnsembleRanking single = ensemble({x});
  bool single_ok = single.summed.size() == x.rows.size();
  for (std::size_t i = 0; single_ok && i < x.rows.size(); ++i) {
    single_ok = single.summed[i].scores == x.rows[i].scores &&
                single.order[i] == refmetrics::ranking_order(x.rows[i].scores);
  }

  // consensus with an all-zero matrix changes nothing
  LogitMatrix zero = x;
  for (auto& row : zero.rows) std::fill(row.scores.begin(), row.scores.end(), 0.0);
  const LogitMatrix same = consensus(x, zero);
  bool zero_ok = true;
  for (std::size_t i = 0; i < x.rows.size(); ++i)
    zero_ok = zero_ok && same.rows[i].scores == x.rows[i].scores;

  // image+joint ensemble never collapses below the weaker head
  std::vector<double> ens_r1s, img_r1s, joint_r1s;
  for (const SeedRun& r : ctx.runs) {
    const EnsembleRanking er = ensemble({r.img_m, r.joint_m});
    LogitMatrix merged;
    merged.candidate_count = r.img_m.candidate_count;
    merged.source = LogitSource::ensemble;
    merged.rows = er.summed;
    ens_r1s.push_back(r1_of(join_instances(merged, ctx.val_ann)));
    img_r1s.push_back(r.img_all);
    joint_r1s.push_back(r.joint_all);
  }
  const double ens_med = median(ens_r1s);
  const double floor_med = std::min(median(img_r1s), median(joint_r1s));
  out << "      single-model ensemble " << (single_ok ? "identical" : "BROKEN")
      << "; zero-matrix consensus " << (zero_ok ? "identity" : "BROKEN") << "\n";
  out << "      median ensemble R@1 " << f3(ens_med) << " vs floor min(" << f3(median(img_r1s))
      << ", " << f3(median(joint_r1s)) << ") - " << kEnsembleSlack << "\n";
  return single_ok && zero_ok && ens_med >= floor_med - kEnsembleSlack;
}

bool crit_lr_schedule(std::ostringstream& out) {
  const bool ok = lr_at(1) == 0.001 && lr_at(8) == 0.0003 && lr_at(9) == 0.00015 &&
                  lr_at(10) == 0.000075;
  out << "      lr(1)=" << lr_at(1) << " lr(8)=" << lr_at(8) << " lr(9)=" << lr_at(9)
      << " lr(10)=" << lr_at(10) << " (exact comparisons)\n";
  return ok;
}

bool crit_determinism(std::ostringstream& out) {
  testutil::TempDir dir("acc-determinism");
  const std::string bin(DIALRANK_BIN);

  struct Pipeline {
    std::string data, runs, eval_out, ens_out;
  };
  auto run_pipeline = [&](const std::string& tag) {
    Pipeline p;
    p.data = dir.file(tag + "-data");
    p.runs = dir.file(tag + "-runs");
    auto must = [&](const std::string& cmd) {
      const testutil::RunResult r = testutil::run_command(cmd, dir);
      if (r.exit_code != 0)
        throw std::runtime_error("pipeline step failed (" + std::to_string(r.exit_code) +
                                 "): " + cmd + "\n" + r.err);
      return r.out;
    };
    must(bin + " gen --out-dir " + p.data +
         " --examples 14 --train-ratio 0.5 --rounds 3 --candidates 6 --objects 4"
         " --feature-dim 5 --history-fraction 0.2 --seed 11");
    must(bin + " train --model consensus_dropout --data " + p.data + "/train.dataset --val " + p.data +
         "/val.dataset --out-dir " + p.runs +
         " --epochs 2 --batch 4 --hidden 6 --embed 4 --fused-dim 8 --seed 3");
    p.eval_out = must(bin + " eval --logits " + p.runs + "/consensus_dropout.logits --annotations " + p.data +
                      "/val.annotations");
    p.ens_out = must(bin + " ensemble " + p.runs + "/consensus_dropout.logits " + p.runs + "/consensus_dropout.logits --out " +
                     p.runs + "/twice.logits --annotations " + p.data + "/val.annotations");
    return p;
  };

  const Pipeline a = run_pipeline("a");
  const Pipeline b = run_pipeline("b");

  // the reports echo output paths, which differ by pipeline tag by design;
  // scrub them so only the actual numbers are compared
  auto scrub = [](std::string text, const Pipeline& p) {
    for (const auto& [needle, tag] :
         {std::pair<std::string, std::string>{p.data, "<data>"}, {p.runs, "<runs>"}}) {
      std::size_t pos = 0;
      while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), tag);
        pos += tag.size();
      }
    }
    return text;
  };

  bool identical = true;
  for (const char* rel : {"/train.dataset", "/val.dataset", "/train.annotations",
                          "/val.annotations"}) {
    if (testutil::slurp(a.data + rel) != testutil::slurp(b.data + rel)) {
      out << "      dataset artifact differs: " << rel << "\n";
      identical = false;
    }
  }
  for (const char* rel :
       {"/consensus_dropout.checkpoint", "/consensus_dropout.logits", "/consensus_dropout.log.jsonl", "/twice.logits"}) {
    if (testutil::slurp(a.runs + rel) != testutil::slurp(b.runs + rel)) {
      out << "      run artifact differs: " << rel << "\n";
      identical = false;
    }
  }
  if (scrub(a.eval_out, a) != scrub(b.eval_out, b) || scrub(a.ens_out, a) != scrub(b.ens_out, b)) {
    out << "      stdout reports differ between runs\n";
    identical = false;
  }

  // every persisted format reloads to something that saves back byte-identically
  bool round_trips = true;
  {
    const std::string path = a.data + "/train.dataset";
    std::ostringstream s;
    save_dataset(load_dataset_file(path), s);
    round_trips = round_trips && s.str() == testutil::slurp(path);
  }
  {
    const std::string path = a.data + "/val.annotations";
    std::ostringstream s;
    save_annotations(load_annotations_file(path), s);
    round_trips = round_trips && s.str() == testutil::slurp(path);
  }
  {
    const std::string path = a.runs + "/consensus_dropout.logits";
    std::ostringstream s;
    LogitMatrix::load_file(path).save(s);
    round_trips = round_trips && s.str() == testutil::slurp(path);
  }
  {
    const std::string path = a.runs + "/consensus_dropout.checkpoint";
    const std::string copy = dir.file("roundtrip.checkpoint");
    save_checkpoint(load_checkpoint(path), copy);
    round_trips = round_trips && testutil::slurp(copy) == testutil::slurp(path);
  }
  out << "      twin pipelines byte-identical: " << (identical ? "yes" : "NO")
      << "; dataset/annotations/logits/checkpoint round-trips: " << (round_trips ? "lossless" : "LOSSY")
      << "\n";
  return identical && round_trips;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::ostringstream&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient soundness", crit_gradients},
      {2, "bilinear pooling oracle", crit_mfb_oracle},
      {3, "round dropout law", crit_round_dropout},
      {4, "instance dropout statistics", crit_instance_dropout},
      {5, "ranking metric oracle", crit_metric_oracle},
      {6, "overfit capability", crit_overfit},
      {7, "history-signal direction", crit_signal_direction},
      {8, "complementarity structure", crit_complementarity},
      {9, "ensemble and consensus identities", crit_ensemble_identities},
      {10, "learning-rate schedule", crit_lr_schedule},
      {11, "determinism and file formats", crit_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    std::ostringstream detail;
    bool ok = false;
    const double t0 = now_sec();
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail << "      unhandled exception: " << e.what() << "\n";
      ok = false;
    }
    const double dt = now_sec() - t0;
    std::printf("[%s] %2d. %s (%.1fs)\n", ok ? "PASS" : "FAIL", c.id, c.name, dt);
    std::fputs(detail.str().c_str(), stdout);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
              criteria.size());
  return failures;
}
