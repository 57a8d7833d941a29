#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dialrank/tensor.hpp"

namespace dialrank {

using TokenId = std::size_t;
using TokenIds = std::vector<TokenId>;

// Token table with reserved PAD=0 and UNK=1. Ids are dense in [0, size).
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;

  Vocabulary();

  TokenId add(const std::string& token);        // existing token keeps its id
  TokenId lookup(const std::string& token) const;  // UNK when absent
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }

  // Whitespace split, lowercased.
  static std::vector<std::string> tokenize(const std::string& text);
  TokenIds encode(const std::string& text) const;

  // Newline-delimited token list, line index = id.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  std::unordered_map<std::string, TokenId> ids_;
  std::vector<std::string> tokens_;
};

// Single-layer LSTM cell. Gate blocks are stacked [input, forget, cell,
// output] along the first axis of the weights and the bias.
struct LstmParams {
  Tensor w_ih;  // [4h×e]
  Tensor w_hh;  // [4h×h]
  Tensor b;     // [4h]

  std::size_t hidden_size() const { return w_hh.dim(1); }
  std::size_t input_size() const { return w_ih.dim(1); }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

// One gated update. h lands in (−1, 1).
LstmState lstm_step(const Tensor& x, const LstmState& prev, const LstmParams& params);

// Runs the cell over embedded tokens and returns the hidden state at the last
// non-PAD position. Trailing PAD tokens never reach the cell, so they cannot
// change the encoding. Throws on sequences that are empty after PAD stripping.
Tensor encode_sequence(const TokenIds& tokens, const LstmParams& cell, const Tensor& embeddings);

// Question tokens followed by ground-truth answer tokens; length T_q + T_a.
TokenIds build_history_round(const TokenIds& question_tokens, const TokenIds& answer_tokens);

struct EncodedDialog {
  Tensor q;           // [d] question encoding at round r
  Tensor history;     // [r×d], row 0 is always the caption encoding
  Tensor candidates;  // [C×d]
  std::size_t round = 0;
};

// The per-round text inputs an encoder consumes; the dataset module produces
// these from its file format.
struct DialogRoundTokens {
  TokenIds question;
  TokenIds answer;  // ground truth, used for later rounds' history
  std::vector<TokenIds> candidates;
};

struct DialogTokens {
  TokenIds caption;
  std::vector<DialogRoundTokens> rounds;
};

struct EncoderParams {
  Tensor embeddings;  // [V×e], shared across the three cells
  LstmParams lstm_q;
  LstmParams lstm_h;
  LstmParams lstm_a;
};

// Encodes round r (1-based): question from Q_r, history rows
// [caption, Q_1‖A_1, ..., Q_{r-1}‖A_{r-1}], one candidate row per answer.
EncodedDialog encode_dialog(const DialogTokens& dialog, std::size_t r,
                            const EncoderParams& params);

}  // namespace dialrank
