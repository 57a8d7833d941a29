#include "dialrank/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "dialrank/errors.hpp"

namespace dialrank {

Tensor cross_entropy(const Tensor& logits, std::size_t gt_index) {
  if (logits.rank() != 1)
    throw std::invalid_argument("cross_entropy: logits must be rank 1, got " +
                                shape_str(logits.shape()));
  const std::size_t c = logits.dim(0);
  if (gt_index >= c)
    throw std::invalid_argument("cross_entropy: gt index " + std::to_string(gt_index) +
                                " out of " + std::to_string(c) + " candidates");
  const auto& x = logits.data();
  const double mx = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (const double v : x) total += std::exp(v - mx);
  const double loss = mx + std::log(total) - x[gt_index];
  Tensor out = Tensor::from_data({1}, {loss});

  auto& tape = Tape::global();
  if (tape.recording() && logits.needs_grad()) {
    auto il = logits.impl();
    auto io = out.impl();
    io->needs_grad = true;
    const int in_id = tape.assign_id(*il);
    tape.push({in_id}, tape.assign_id(*io), [il, io, gt_index, mx, total, c]() {
      const double g = io->grad_ref()[0];
      auto& dx = il->grad_ref();
      const auto& x = il->data;
      for (std::size_t i = 0; i < c; ++i) {
        const double p = std::exp(x[i] - mx) / total;
        dx[i] += g * (p - (i == gt_index ? 1.0 : 0.0));
      }
    });
  }
  return out;
}

AdamState make_adam_state(const ParamStore& params) {
  AdamState state;
  state.slots.reserve(params.size());
  for (const auto& [name, t] : params.entries())
    state.slots.push_back({std::vector<double>(t.numel(), 0.0),
                           std::vector<double>(t.numel(), 0.0)});
  return state;
}

void adam_step(ParamStore& params, AdamState& state, double lr) {
  if (state.slots.size() != params.size())
    throw std::invalid_argument("adam_step: state holds " + std::to_string(state.slots.size()) +
                                " slots for " + std::to_string(params.size()) + " parameters");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params.entries()[i].second;
    auto& slot = state.slots[i];
    if (slot.m.size() != t.numel())
      throw std::invalid_argument("adam_step: slot " + std::to_string(i) +
                                  " does not mirror parameter shape");
    auto& w = t.data();
    const auto& g = t.grad();
    if (g.empty()) {
      // Parameter never touched a tape this step: zero gradient, moments decay.
      for (std::size_t j = 0; j < w.size(); ++j) {
        slot.m[j] *= state.beta1;
        slot.v[j] *= state.beta2;
        w[j] -= lr * (slot.m[j] / bc1) / (std::sqrt(slot.v[j] / bc2) + state.eps);
      }
      continue;
    }
    for (std::size_t j = 0; j < w.size(); ++j) {
      slot.m[j] = state.beta1 * slot.m[j] + (1.0 - state.beta1) * g[j];
      slot.v[j] = state.beta2 * slot.v[j] + (1.0 - state.beta2) * g[j] * g[j];
      w[j] -= lr * (slot.m[j] / bc1) / (std::sqrt(slot.v[j] / bc2) + state.eps);
    }
  }
}

double lr_at(std::size_t epoch) {
  if (epoch < 1) throw std::invalid_argument("lr_at: epochs are 1-based");
  // Literal table so the linear leg lands exactly on the advertised values.
  static constexpr double linear[8] = {0.001, 0.0009, 0.0008, 0.0007,
                                       0.0006, 0.0005, 0.0004, 0.0003};
  if (epoch <= 8) return linear[epoch - 1];
  double lr = linear[7];
  for (std::size_t e = 9; e <= epoch; ++e) lr *= 0.5;  // exact halvings
  return lr;
}

namespace {

std::mt19937_64 sub_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

void append_epoch_log(std::ofstream& log, const EpochRecord& rec) {
  if (!log.is_open()) return;
  nlohmann::json j;
  j["epoch"] = rec.epoch;
  j["lr"] = rec.lr;
  j["loss"] = rec.loss;
  j["ndcg"] = rec.val.ndcg;
  j["mrr"] = rec.val.mrr;
  j["r_at_1"] = rec.val.r_at_1;
  j["r_at_5"] = rec.val.r_at_5;
  j["r_at_10"] = rec.val.r_at_10;
  j["mean_rank"] = rec.val.mean_rank;
  log << j.dump() << "\n";
  log.flush();
}

}  // namespace

TrainResult train(Model& model, const Dataset& train_data, const Dataset& val_data,
                  const TrainConfig& config) {
  if (train_data.examples.empty() || val_data.examples.empty())
    throw std::invalid_argument("train: both splits need examples");
  if (train_data.candidates != val_data.candidates)
    throw std::invalid_argument("train: candidate counts disagree across splits");
  if (model.config.vocab_size < train_data.vocab.size())
    throw std::invalid_argument("train: model vocabulary smaller than the dataset's");
  if (config.epochs == 0 || config.batch_examples == 0)
    throw std::invalid_argument("train: epochs and batch_examples must be positive");
  if (config.instance_dropout_p < 0.0 || config.instance_dropout_p >= 1.0)
    throw std::invalid_argument("train: instance_dropout_p must lie in [0,1)");

  auto shuffle_rng = sub_rng(config.seed, 1);
  auto round_rng = sub_rng(config.seed, 2);
  auto instance_rng = sub_rng(config.seed, 3);

  std::vector<DialogTokens> tokens;
  tokens.reserve(train_data.examples.size());
  for (const auto& ex : train_data.examples) tokens.push_back(to_dialog_tokens(ex));
  const std::vector<Annotation> val_annotations = annotations_from(val_data);

  std::ofstream log;
  if (!config.log_path.empty()) {
    log.open(config.log_path);
    if (!log) throw data_error("cannot write training log '" + config.log_path + "'");
  }

  AdamState adam = make_adam_state(model.params);
  TrainResult result;
  double best_ndcg = -1.0;

  std::vector<std::size_t> order(train_data.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = lr_at(epoch);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(shuffle_rng)]);
    }

    double loss_sum = 0.0;
    std::size_t instance_count = 0;
    for (std::size_t batch_start = 0, batch_id = 0; batch_start < order.size();
         batch_start += config.batch_examples, ++batch_id) {
      const std::size_t batch_end =
          std::min(batch_start + config.batch_examples, order.size());

      Tape::global().clear();
      model.params.zero_grads();

      std::size_t batch_instances = 0;
      for (std::size_t b = batch_start; b < batch_end; ++b)
        batch_instances += train_data.examples[order[b]].rounds.size();
      std::vector<double> mask;
      if (model.kind == ModelKind::consensus_dropout)
        mask = instance_dropout_mask(batch_instances, config.instance_dropout_p, instance_rng);

      Tensor loss_acc;
      std::size_t idx = 0;
      for (std::size_t b = batch_start; b < batch_end; ++b) {
        const DialogExample& ex = train_data.examples[order[b]];
        const DialogTokens& toks = tokens[order[b]];
        for (std::size_t round = 1; round <= ex.rounds.size(); ++round, ++idx) {
          ForwardOptions options;
          RoundDropoutPlan plan;
          if (config.round_dropout && model.has_joint_head()) {
            plan = round_dropout(round, round, round_rng);  // history rows = round
            if (plan.drop_count > 0) options.dropout_plan = &plan;
          }
          Tensor scores;
          switch (model.kind) {
            case ModelKind::image_only:
              scores = image_only_scores(model, toks, ex.image_features, round);
              break;
            case ModelKind::joint:
              scores = joint_scores(model, toks, ex.image_features, round, options);
              break;
            case ModelKind::consensus_dropout:
              options.joint_scale = mask[idx];
              scores = consensus_scores(model, toks, ex.image_features, round, options).fused;
              break;
          }
          Tensor li = cross_entropy(scores, ex.rounds[round - 1].gt_index);
          loss_acc = loss_acc.defined() ? add(loss_acc, li) : li;
        }
      }
      Tensor loss = scale(loss_acc, 1.0 / static_cast<double>(batch_instances));
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value))
        throw numeric_error("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_id) + " (first example " +
                            std::to_string(train_data.examples[order[batch_start]].example_id) +
                            ")");
      backward(loss);
      adam_step(model.params, adam, lr);
      Tape::global().clear();

      loss_sum += loss_value * static_cast<double>(batch_instances);
      instance_count += batch_instances;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.loss = loss_sum / static_cast<double>(instance_count);
    DatasetScores scores = score_dataset(model, val_data);
    rec.val = evaluate(join_instances(scores.primary(), val_annotations));
    append_epoch_log(log, rec);
    result.history.push_back(rec);

    if (rec.val.ndcg > best_ndcg) {
      best_ndcg = rec.val.ndcg;
      result.best_epoch = epoch;
      result.best_val = rec.val;
      if (!config.checkpoint_path.empty()) save_checkpoint(model, config.checkpoint_path);
      if (!config.logits_path.empty()) scores.primary().save_file(config.logits_path);
    }
  }
  return result;
}

}  // namespace dialrank
