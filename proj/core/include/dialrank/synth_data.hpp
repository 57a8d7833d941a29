#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "dialrank/encoders.hpp"
#include "dialrank/tensor.hpp"

namespace dialrank {

// What a question asks for. `pronoun_size` rounds ("what size is the one with
// that color") can only be answered by resolving the previous round's answer.
enum class QuestionKind { color, size, pronoun_size };

std::string to_string(QuestionKind kind);
QuestionKind question_kind_from_string(const std::string& text);

// Latent attribute codes for one object. Shape and color are unique within an
// image; size is not.
struct ObjectAttrs {
  std::string shape;
  std::string color;
  std::string size;
};

struct RoundData {
  QuestionKind kind = QuestionKind::color;
  TokenIds question;
  TokenIds answer;
  std::vector<TokenIds> candidates;  // C entries
  std::size_t gt_index = 0;
  std::vector<double> relevance;  // C entries, gt = 1.0, paraphrase = 0.8
};

struct DialogExample {
  std::size_t example_id = 0;
  Tensor image_features;  // [objects, feature_dim], never requires grad
  std::vector<ObjectAttrs> objects;
  TokenIds caption;
  std::vector<RoundData> rounds;
};

struct DatasetConfig {
  std::size_t n_examples = 350;
  double train_ratio = 6.0 / 7.0;  // 300 train
  double val_ratio = 1.0 / 7.0;    // 50 val
  std::size_t rounds = 5;
  std::size_t candidates = 20;
  std::size_t objects = 6;
  std::size_t feature_dim = 24;
  std::size_t vocab_size = 64;  // capacity bound on the derived vocabulary
  double history_fraction = 0.19;
  double noise_sigma = 0.1;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

struct Dataset {
  std::size_t rounds = 0;
  std::size_t candidates = 0;
  std::size_t objects = 0;
  std::size_t feature_dim = 0;
  Vocabulary vocab;
  std::vector<DialogExample> examples;
};

// Deterministic generation. History-dependent rounds are stratified within the
// train and val partitions so each split carries the configured fraction.
Dataset generate(const DatasetConfig& config);

// Splits at the boundary implied by train_ratio; generate() stratified against
// the same boundary.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_ratio);

void save_dataset(const Dataset& dataset, std::ostream& out);
Dataset load_dataset(std::istream& in);
void save_dataset_file(const Dataset& dataset, const std::string& path);
Dataset load_dataset_file(const std::string& path);

// Fraction of rounds that need history to answer.
double measure_history_fraction(const Dataset& dataset);

// Construct-time oracles, derived from the latent attribute codes rather than
// from the stored gt_index. The image-only oracle answers color/size questions
// exactly and guesses uniformly among plain size candidates on pronoun rounds.
std::size_t oracle_full_answer(const Dataset& dataset, const DialogExample& example,
                               std::size_t round_idx);
std::size_t oracle_image_only_answer(const Dataset& dataset, const DialogExample& example,
                                     std::size_t round_idx, std::mt19937_64& rng);

// Tokenized view consumed by the encoders (caption + per-round Q/A/candidates).
DialogTokens to_dialog_tokens(const DialogExample& example);

// One annotation per (example, round), rounds 1-based, in dataset order.
std::vector<struct Annotation> annotations_from(const Dataset& dataset);

// Converter stub for the public Visual Dialog v1.0 JSON release. Documents the
// field mapping (dialogs[].caption/dialog[].question/answer indices against the
// shared question/answer string tables, answer_options -> candidates,
// gt_index -> gt_index, dense relevance -> relevance) but is not implemented:
// this repository trains on generated data only. Always throws.
Dataset convert_external_release(const std::string& path);

}  // namespace dialrank
