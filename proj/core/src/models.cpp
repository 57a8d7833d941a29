#include "dialrank/models.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dialrank/errors.hpp"

namespace dialrank {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::image_only: return "image_only";
    case ModelKind::joint: return "joint";
    case ModelKind::consensus_dropout: return "consensus_dropout";
  }
  throw std::invalid_argument("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& text) {
  if (text == "image_only") return ModelKind::image_only;
  if (text == "joint") return ModelKind::joint;
  if (text == "consensus_dropout") return ModelKind::consensus_dropout;
  throw data_error("unknown model kind '" + text + "'");
}

Tensor ParamStore::add(const std::string& name, Tensor t) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  t.impl()->requires_grad = true;
  t.impl()->needs_grad = true;
  index_[name] = entries_.size();
  entries_.emplace_back(name, t);
  return t;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("no parameter named '" + name + "'");
  return entries_[it->second].second;
}

std::size_t ParamStore::total_scalars() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  if (vocab_size < 2) throw std::invalid_argument("vocab_size must cover the reserved tokens");
  positive(embed_dim, "embed_dim");
  positive(hidden_dim, "hidden_dim");
  positive(factor_count, "factor_count");
  positive(fused_dim, "fused_dim");
  positive(feature_dim, "feature_dim");
}

namespace {

struct Init {
  std::mt19937_64 rng;

  Tensor uniform(std::vector<std::size_t> shape, double a) {
    std::uniform_real_distribution<double> dist(-a, a);
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    std::vector<double> data(n);
    for (auto& v : data) v = dist(rng);
    return Tensor::from_data(std::move(shape), std::move(data));
  }
  // fan-balanced uniform for projection-like weights
  Tensor xavier(std::size_t out, std::size_t in) {
    return uniform({out, in}, std::sqrt(6.0 / static_cast<double>(in + out)));
  }
  Tensor xavier_vec(std::size_t n) {
    return uniform({n}, std::sqrt(6.0 / static_cast<double>(n + 1)));
  }
};

LstmParams make_lstm(Model& m, Init& init, const std::string& prefix, std::size_t in_dim) {
  const std::size_t h = m.config.hidden_dim;
  const double a = 1.0 / std::sqrt(static_cast<double>(h));
  LstmParams p;
  p.w_ih = m.params.add(prefix + ".w_ih", init.uniform({4 * h, in_dim}, a));
  p.w_hh = m.params.add(prefix + ".w_hh", init.uniform({4 * h, h}, a));
  p.b = m.params.add(prefix + ".b", Tensor::zeros({4 * h}));
  return p;
}

LinearParams make_fc(Model& m, Init& init, const std::string& prefix, std::size_t out,
                     std::size_t in) {
  LinearParams p;
  p.w = m.params.add(prefix + ".w", init.xavier(out, in));
  p.b = m.params.add(prefix + ".b", Tensor::zeros({out}));
  return p;
}

MfbParams make_mfb(Model& m, Init& init, const std::string& prefix, std::size_t item_dim,
                   std::size_t query_dim) {
  MfbParams p;
  for (std::size_t i = 0; i < m.config.factor_count; ++i) {
    p.factors_x.push_back(
        m.params.add(prefix + ".factor_x." + std::to_string(i), init.xavier(m.config.fused_dim, item_dim)));
    p.factors_q.push_back(
        m.params.add(prefix + ".factor_q." + std::to_string(i), init.xavier(m.config.fused_dim, query_dim)));
  }
  // The pooled rows this projects are unit-normalized, so a fan-based scale
  // would leave the attention logits with ~0.1 variance and the softmax
  // effectively frozen at uniform. ±√3 gives the logits unit variance at
  // init, which lets the attention differentiate items from the first steps.
  p.attn_proj = m.params.add(prefix + ".attn_proj", init.uniform({1, m.config.fused_dim},
                                                                 std::sqrt(3.0)));
  return p;
}

}  // namespace

Model build_model(ModelKind kind, const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.kind = kind;
  m.config = config;
  Init init{std::mt19937_64(seed)};

  const std::size_t d = config.hidden_dim;
  m.encoder.embeddings =
      m.params.add("embed.table", init.xavier(config.vocab_size, config.embed_dim));
  m.encoder.lstm_q = make_lstm(m, init, "lstm_q", config.embed_dim);
  if (m.has_joint_head()) m.encoder.lstm_h = make_lstm(m, init, "lstm_h", config.embed_dim);
  m.encoder.lstm_a = make_lstm(m, init, "lstm_a", config.embed_dim);
  m.visual_proj = make_fc(m, init, "vis_proj", d, config.feature_dim);

  if (m.has_image_only_head()) {
    m.image_only.visual_proj = m.visual_proj;
    m.image_only.mfb = make_mfb(m, init, "img.mfb", d, d);
    m.image_only.fc_v = make_fc(m, init, "img.fc_v", d, d);
    m.image_only.fc_q = make_fc(m, init, "img.fc_q", d, d);
    m.image_only.fc_f = make_fc(m, init, "img.fc_f", d, d);
  }
  if (m.has_joint_head()) {
    m.joint.w_s = m.params.add("joint.w_s", init.xavier_vec(3 * d));
    m.joint.mfb_vis = make_mfb(m, init, "joint.mfb_vis", 3 * d, d);
    m.joint.mfb_hist = make_mfb(m, init, "joint.mfb_hist", 3 * d, d);
    m.joint.fc_v = make_fc(m, init, "joint.fc_v", d, 3 * d);
    m.joint.fc_h = make_fc(m, init, "joint.fc_h", d, 3 * d);
    m.joint.fc_q = make_fc(m, init, "joint.fc_q", d, d);
    m.joint.fc_f = make_fc(m, init, "joint.fc_f", d, 2 * d);
  }
  return m;
}

namespace {

Tensor encode_candidates(const Model& model, const DialogRoundTokens& rt) {
  std::vector<Tensor> rows;
  rows.reserve(rt.candidates.size());
  for (const auto& cand : rt.candidates)
    rows.push_back(encode_sequence(cand, model.encoder.lstm_a, model.encoder.embeddings));
  return stack_rows(rows);
}

Tensor encode_image_question(const Model& model, const DialogTokens& dialog, std::size_t round) {
  const auto& rt = dialog.rounds.at(round - 1);
  if (!model.config.caption_to_question)
    return encode_sequence(rt.question, model.encoder.lstm_q, model.encoder.embeddings);
  TokenIds tokens = dialog.caption;
  tokens.insert(tokens.end(), rt.question.begin(), rt.question.end());
  return encode_sequence(tokens, model.encoder.lstm_q, model.encoder.embeddings);
}

void check_round(const DialogTokens& dialog, std::size_t round) {
  if (round == 0 || round > dialog.rounds.size())
    throw std::invalid_argument("round " + std::to_string(round) + " outside 1.." +
                                std::to_string(dialog.rounds.size()));
}

Tensor prepared_history(const Tensor& history, const ForwardOptions& options) {
  Tensor h = history;
  if (options.history_keep_last != std::numeric_limits<std::size_t>::max())
    h = truncate_history(h, options.history_keep_last);
  if (options.dropout_plan != nullptr) h = apply_round_dropout(h, *options.dropout_plan);
  return h;
}

}  // namespace

Tensor image_only_scores(const Model& model, const DialogTokens& dialog,
                         const Tensor& image_features, std::size_t round) {
  if (!model.has_image_only_head())
    throw std::invalid_argument("model has no image-only head");
  check_round(dialog, round);
  const auto& rt = dialog.rounds[round - 1];
  Tensor q = encode_image_question(model, dialog, round);
  Tensor candidates = encode_candidates(model, rt);
  Tensor objects = project_visual(image_features, model.image_only.visual_proj);
  return image_only_forward(objects, q, candidates, model.image_only);
}

Tensor joint_scores(const Model& model, const DialogTokens& dialog, const Tensor& image_features,
                    std::size_t round, const ForwardOptions& options) {
  if (!model.has_joint_head()) throw std::invalid_argument("model has no joint head");
  check_round(dialog, round);
  EncodedDialog enc = encode_dialog(dialog, round, model.encoder);
  Tensor history = prepared_history(enc.history, options);
  Tensor objects = project_visual(image_features, model.visual_proj);
  return joint_head_forward(objects, history, enc.q, enc.candidates, model.joint);
}

ConsensusScores consensus_scores(const Model& model, const DialogTokens& dialog,
                                 const Tensor& image_features, std::size_t round,
                                 const ForwardOptions& options) {
  if (model.kind != ModelKind::consensus_dropout)
    throw std::invalid_argument("consensus scoring needs both heads");
  check_round(dialog, round);
  EncodedDialog enc = encode_dialog(dialog, round, model.encoder);
  Tensor objects = project_visual(image_features, model.visual_proj);

  ConsensusScores out;
  Tensor q_img = model.config.caption_to_question
                     ? encode_image_question(model, dialog, round)
                     : enc.q;
  out.image_only = image_only_forward(objects, q_img, enc.candidates, model.image_only);
  Tensor history = prepared_history(enc.history, options);
  out.joint = joint_head_forward(objects, history, enc.q, enc.candidates, model.joint);
  out.fused = add(out.image_only, scale(out.joint, options.joint_scale));
  return out;
}

const LogitMatrix& DatasetScores::primary() const {
  if (fused) return *fused;
  if (joint) return *joint;
  if (image_only) return *image_only;
  throw std::logic_error("no scores computed");
}

DatasetScores score_dataset(const Model& model, const Dataset& dataset,
                            std::size_t history_keep_last) {
  NoGradGuard guard;
  DatasetScores out;
  auto fresh = [&](LogitSource source) {
    LogitMatrix m;
    m.candidate_count = dataset.candidates;
    m.source = source;
    return m;
  };
  if (model.has_image_only_head()) out.image_only = fresh(LogitSource::image_only);
  if (model.has_joint_head()) out.joint = fresh(LogitSource::joint);
  if (model.kind == ModelKind::consensus_dropout) out.fused = fresh(LogitSource::fused);

  ForwardOptions options;
  options.history_keep_last = history_keep_last;
  for (const auto& ex : dataset.examples) {
    const DialogTokens tokens = to_dialog_tokens(ex);
    for (std::size_t round = 1; round <= ex.rounds.size(); ++round) {
      auto push = [&](std::optional<LogitMatrix>& m, const Tensor& scores) {
        m->rows.push_back({ex.example_id, round, scores.data()});
      };
      switch (model.kind) {
        case ModelKind::image_only:
          push(out.image_only, image_only_scores(model, tokens, ex.image_features, round));
          break;
        case ModelKind::joint:
          push(out.joint, joint_scores(model, tokens, ex.image_features, round, options));
          break;
        case ModelKind::consensus_dropout: {
          ConsensusScores s = consensus_scores(model, tokens, ex.image_features, round, options);
          push(out.image_only, s.image_only);
          push(out.joint, s.joint);
          push(out.fused, s.fused);
          break;
        }
      }
    }
  }
  return out;
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write checkpoint '" + path + "'");
  out << "DIALRANK CHECKPOINT 1\n";
  out << "KIND " << to_string(model.kind) << "\n";
  const auto& c = model.config;
  out << "CONFIG VOCAB " << c.vocab_size << " EMBED " << c.embed_dim << " HIDDEN " << c.hidden_dim
      << " FACTORS " << c.factor_count << " FUSED " << c.fused_dim << " FEATURE " << c.feature_dim
      << " CAPTION_TO_QUESTION " << (c.caption_to_question ? 1 : 0) << "\n";
  out << "PARAMS " << model.params.size() << "\n";
  for (const auto& [name, t] : model.params.entries()) {
    out << name << " " << t.rank();
    for (std::size_t i = 0; i < t.rank(); ++i) out << " " << t.dim(i);
    out << "\n";
  }
  out << "BINARY\n";
  for (const auto& [name, t] : model.params.entries())
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!out) throw data_error("short write on checkpoint '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot read checkpoint '" + path + "'");
  auto fail = [&](const std::string& msg) -> void { throw data_error(path + ": " + msg); };

  std::string line;
  if (!std::getline(in, line) || line != "DIALRANK CHECKPOINT 1")
    fail("expected header 'DIALRANK CHECKPOINT 1'");

  ModelKind kind = ModelKind::image_only;
  {
    if (!std::getline(in, line)) fail("missing KIND line");
    std::istringstream ls(line);
    std::string kw, value;
    if (!(ls >> kw >> value) || kw != "KIND") fail("expected KIND line");
    kind = model_kind_from_string(value);
  }
  ModelConfig config;
  {
    if (!std::getline(in, line)) fail("missing CONFIG line");
    std::istringstream ls(line);
    std::string kw;
    auto read_field = [&](const char* name, std::size_t& slot) {
      std::string field;
      long long v = 0;
      if (!(ls >> field >> v) || field != name || v < 0)
        fail(std::string("bad CONFIG field '") + name + "'");
      slot = static_cast<std::size_t>(v);
    };
    if (!(ls >> kw) || kw != "CONFIG") fail("expected CONFIG line");
    read_field("VOCAB", config.vocab_size);
    read_field("EMBED", config.embed_dim);
    read_field("HIDDEN", config.hidden_dim);
    read_field("FACTORS", config.factor_count);
    read_field("FUSED", config.fused_dim);
    read_field("FEATURE", config.feature_dim);
    std::size_t flag = 0;
    read_field("CAPTION_TO_QUESTION", flag);
    config.caption_to_question = flag != 0;
  }
  std::size_t n_params = 0;
  {
    if (!std::getline(in, line)) fail("missing PARAMS line");
    std::istringstream ls(line);
    std::string kw;
    long long v = 0;
    if (!(ls >> kw >> v) || kw != "PARAMS" || v < 0) fail("expected PARAMS line");
    n_params = static_cast<std::size_t>(v);
  }

  Model model = build_model(kind, config, 0);
  if (model.params.size() != n_params)
    fail("manifest lists " + std::to_string(n_params) + " parameters, model has " +
         std::to_string(model.params.size()));

  for (const auto& [name, t] : model.params.entries()) {
    if (!std::getline(in, line)) fail("manifest truncated before '" + name + "'");
    std::istringstream ls(line);
    std::string got_name;
    std::size_t rank = 0;
    if (!(ls >> got_name >> rank)) fail("bad manifest line '" + line + "'");
    if (got_name != name) fail("manifest has '" + got_name + "' where model expects '" + name + "'");
    if (rank != t.rank()) fail("rank mismatch for '" + name + "'");
    for (std::size_t i = 0; i < rank; ++i) {
      std::size_t dim = 0;
      if (!(ls >> dim) || dim != t.dim(i)) fail("shape mismatch for '" + name + "'");
    }
  }
  if (!std::getline(in, line) || line != "BINARY") fail("expected BINARY marker");
  for (auto& [name, t] : model.params.entries()) {
    Tensor tensor = t;
    in.read(reinterpret_cast<char*>(tensor.data().data()),
            static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != tensor.numel() * sizeof(double))
      fail("payload truncated in '" + name + "'");
  }
  char extra = 0;
  if (in.read(&extra, 1) && in.gcount() == 1) fail("payload longer than manifest");
  return model;
}

}  // namespace dialrank
