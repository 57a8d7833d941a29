#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dialrank/encoders.hpp"
#include "dialrank/fusion.hpp"
#include "dialrank/image_only_head.hpp"
#include "dialrank/joint_head.hpp"
#include "dialrank/synth_data.hpp"
#include "dialrank/tensor.hpp"

namespace dialrank {

enum class ModelKind { image_only, joint, consensus_dropout };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& text);

// Ordered name → parameter registry. Iteration order is registration order,
// which fixes the optimizer state layout and the checkpoint payload layout.
class ParamStore {
 public:
  Tensor add(const std::string& name, Tensor t);  // marks requires_grad
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t total_scalars() const;
  void zero_grads();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ModelConfig {
  std::size_t vocab_size = 0;   // V, bound to a dataset's vocabulary
  std::size_t embed_dim = 16;   // e
  std::size_t hidden_dim = 32;  // d
  std::size_t factor_count = 2; // m
  std::size_t fused_dim = 64;   // d_m
  std::size_t feature_dim = 24; // d_v
  // The image-only head never reads history; this flag optionally prepends the
  // caption tokens to the question so captions still reach it as text.
  bool caption_to_question = false;

  void validate() const;  // throws std::invalid_argument
};

// A model owns its parameters once and wires them into the head structs by
// handle, so shared parameters are genuinely the same tensors. The fused model
// shares the embedding table, all three sequence cells, and the visual
// projection across its two heads; each head keeps its own pooling factors and
// fc stacks.
struct Model {
  ModelKind kind = ModelKind::image_only;
  ModelConfig config;
  ParamStore params;
  EncoderParams encoder;     // lstm_h is only registered when history is used
  LinearParams visual_proj;  // canonical location; heads alias it
  ImageOnlyParams image_only;
  JointParams joint;

  bool has_image_only_head() const { return kind != ModelKind::joint; }
  bool has_joint_head() const { return kind != ModelKind::image_only; }
};

Model build_model(ModelKind kind, const ModelConfig& config, std::uint64_t seed);

struct ForwardOptions {
  const RoundDropoutPlan* dropout_plan = nullptr;  // training-time round dropout
  std::size_t history_keep_last = std::numeric_limits<std::size_t>::max();  // H-k ablation
  double joint_scale = 1.0;  // consensus row multiplier ξ (training-time)
};

// Logit row [C] for one (dialog, round) instance, round 1-based.
Tensor image_only_scores(const Model& model, const DialogTokens& dialog,
                         const Tensor& image_features, std::size_t round);
Tensor joint_scores(const Model& model, const DialogTokens& dialog, const Tensor& image_features,
                    std::size_t round, const ForwardOptions& options = {});

struct ConsensusScores {
  Tensor image_only;
  Tensor joint;
  Tensor fused;  // image_only + joint_scale · joint
};
ConsensusScores consensus_scores(const Model& model, const DialogTokens& dialog,
                                 const Tensor& image_features, std::size_t round,
                                 const ForwardOptions& options = {});

// Grad-free scoring of every (example, round) instance, in dataset order.
struct DatasetScores {
  std::optional<LogitMatrix> image_only;
  std::optional<LogitMatrix> joint;
  std::optional<LogitMatrix> fused;

  const LogitMatrix& primary() const;  // what this model ranks with
};
DatasetScores score_dataset(const Model& model, const Dataset& dataset,
                            std::size_t history_keep_last = std::numeric_limits<std::size_t>::max());

// Text manifest (names, shapes) + raw little-endian float64 payload.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace dialrank
