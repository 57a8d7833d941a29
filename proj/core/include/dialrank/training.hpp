#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dialrank/metrics.hpp"
#include "dialrank/models.hpp"
#include "dialrank/tensor.hpp"

namespace dialrank {

// −log softmax(logits)[gt], max-subtracted. The recorded gradient is exactly
// softmax(logits) − onehot(gt).
Tensor cross_entropy(const Tensor& logits, std::size_t gt_index);

// Bias-corrected Adam. One moment slot per parameter, in registration order.
struct AdamState {
  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
  };
  std::vector<Slot> slots;
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const ParamStore& params);

// One update from the currently accumulated gradients. Does not clear grads.
void adam_step(ParamStore& params, AdamState& state, double lr);

// Epochs 1..8 step linearly from 0.001 down to 0.0003; later epochs halve.
double lr_at(std::size_t epoch);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_examples = 8;  // instances per batch = batch_examples × rounds
  double instance_dropout_p = 0.25;  // consensus composite only
  bool round_dropout = true;         // history-reading heads only
  std::uint64_t seed = 0;
  std::string log_path;         // JSON-lines epoch log, empty = no log
  std::string checkpoint_path;  // best checkpoint, empty = no save
  std::string logits_path;      // eval-split logits at the best epoch
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;  // mean cross-entropy per instance
  MetricReport val;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based, highest val NDCG
  MetricReport best_val;
};

// Deterministic given config.seed. Evaluates on val_data after every epoch and
// keeps the best-NDCG parameters on disk when paths are set. Throws
// numeric_error naming the offending batch when the loss stops being finite.
TrainResult train(Model& model, const Dataset& train_data, const Dataset& val_data,
                  const TrainConfig& config);

}  // namespace dialrank
