#include "dialrank/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dialrank/errors.hpp"

namespace dialrank {

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

TokenId Vocabulary::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  TokenId id = tokens_.size();
  ids_.emplace(token, id);
  tokens_.push_back(token);
  return id;
}

TokenId Vocabulary::lookup(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size())
    throw std::invalid_argument("Vocabulary: id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<std::string> Vocabulary::tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TokenIds Vocabulary::encode(const std::string& text) const {
  TokenIds ids;
  for (const auto& tok : tokenize(text)) ids.push_back(lookup(tok));
  return ids;
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& tok : tokens_) out << tok << "\n";
}

Vocabulary Vocabulary::load(std::istream& in) {
  Vocabulary vocab;
  std::string line;
  std::size_t idx = 0;
  while (std::getline(in, line)) {
    if (idx == 0 || idx == 1) {
      // reserved rows must match the fixed PAD/UNK tokens
      const std::string expected = idx == 0 ? "<pad>" : "<unk>";
      if (line != expected)
        throw data_error("vocabulary line " + std::to_string(idx + 1) + ": expected '" +
                         expected + "', got '" + line + "'");
    } else {
      vocab.add(line);
    }
    ++idx;
  }
  if (idx < 2) throw data_error("vocabulary file is missing the reserved <pad>/<unk> rows");
  return vocab;
}

LstmState lstm_step(const Tensor& x, const LstmState& prev, const LstmParams& params) {
  const std::size_t h = params.hidden_size();
  if (x.rank() != 1 || x.dim(0) != params.input_size())
    throw std::invalid_argument("lstm_step: input " + shape_str(x.shape()) + " vs w_ih " +
                                shape_str(params.w_ih.shape()));
  if (prev.h.dim(0) != h || prev.c.dim(0) != h)
    throw std::invalid_argument("lstm_step: state size " + shape_str(prev.h.shape()) +
                                " vs hidden " + std::to_string(h));
  Tensor gates = add(add(matvec(params.w_ih, x), matvec(params.w_hh, prev.h)), params.b);
  Tensor gi = sigmoid(slice(gates, 0, h));
  Tensor gf = sigmoid(slice(gates, h, h));
  Tensor gc = tanh_op(slice(gates, 2 * h, h));
  Tensor go = sigmoid(slice(gates, 3 * h, h));
  Tensor c = add(mul(gf, prev.c), mul(gi, gc));
  Tensor hidden = mul(go, tanh_op(c));
  return {hidden, c};
}

Tensor encode_sequence(const TokenIds& tokens, const LstmParams& cell, const Tensor& embeddings) {
  std::size_t end = tokens.size();
  while (end > 0 && tokens[end - 1] == Vocabulary::kPad) --end;
  if (end == 0) throw std::invalid_argument("encode_sequence: empty sequence after PAD stripping");
  const std::size_t h = cell.hidden_size();
  LstmState state{Tensor::zeros({h}), Tensor::zeros({h})};
  for (std::size_t t = 0; t < end; ++t) {
    Tensor x = embedding_row(embeddings, tokens[t]);
    state = lstm_step(x, state, cell);
  }
  return state.h;
}

TokenIds build_history_round(const TokenIds& question_tokens, const TokenIds& answer_tokens) {
  if (question_tokens.empty() || answer_tokens.empty())
    throw std::invalid_argument("build_history_round: empty question or answer");
  TokenIds out = question_tokens;
  out.insert(out.end(), answer_tokens.begin(), answer_tokens.end());
  return out;
}

EncodedDialog encode_dialog(const DialogTokens& dialog, std::size_t r,
                            const EncoderParams& params) {
  if (r < 1 || r > dialog.rounds.size())
    throw std::invalid_argument("encode_dialog: round " + std::to_string(r) + " out of 1.." +
                                std::to_string(dialog.rounds.size()));
  EncodedDialog out;
  out.round = r;
  out.q = encode_sequence(dialog.rounds[r - 1].question, params.lstm_q, params.embeddings);

  std::vector<Tensor> hist_rows;
  hist_rows.push_back(encode_sequence(dialog.caption, params.lstm_h, params.embeddings));
  for (std::size_t i = 0; i + 1 < r; ++i) {
    TokenIds joined =
        build_history_round(dialog.rounds[i].question, dialog.rounds[i].answer);
    hist_rows.push_back(encode_sequence(joined, params.lstm_h, params.embeddings));
  }
  out.history = stack_rows(hist_rows);

  std::vector<Tensor> cand_rows;
  for (const auto& cand : dialog.rounds[r - 1].candidates)
    cand_rows.push_back(encode_sequence(cand, params.lstm_a, params.embeddings));
  if (cand_rows.empty()) throw std::invalid_argument("encode_dialog: round has no candidates");
  out.candidates = stack_rows(cand_rows);
  return out;
}

}  // namespace dialrank
