#include "dialrank/synth_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dialrank/errors.hpp"
#include "dialrank/fusion.hpp"
#include "dialrank/metrics.hpp"

namespace dialrank {

namespace {

const std::vector<std::string>& shape_pool() {
  static const std::vector<std::string> pool = {"circle", "square", "triangle", "star",
                                                "hexagon", "diamond", "cross",  "ring",
                                                "arrow",  "moon"};
  return pool;
}

const std::vector<std::string>& color_pool() {
  static const std::vector<std::string> pool = {"red",    "blue", "green", "yellow", "purple",
                                                "orange", "pink", "brown", "gray",   "teal"};
  return pool;
}

const std::vector<std::string>& size_pool() {
  static const std::vector<std::string> pool = {"small", "medium", "large"};
  return pool;
}

bool in_pool(const std::vector<std::string>& pool, const std::string& word) {
  return std::find(pool.begin(), pool.end(), word) != pool.end();
}

// Every word the generator can emit, in a fixed order so vocabularies are
// identical across configs.
Vocabulary canonical_vocabulary() {
  Vocabulary v;
  for (const char* w : {"what", "color", "size", "is", "the", "one", "with", "that", "it", "a",
                        "scene"})
    v.add(w);
  for (const auto& w : shape_pool()) v.add(w);
  for (const auto& w : color_pool()) v.add(w);
  for (const auto& w : size_pool()) v.add(w);
  return v;
}

template <typename T>
void fy_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = 0; i + 1 < items.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

TokenIds words(const Vocabulary& v, std::initializer_list<std::string> ws) {
  TokenIds ids;
  for (const auto& w : ws) ids.push_back(v.lookup(w));
  return ids;
}

struct CandidateSet {
  std::vector<TokenIds> candidates;
  std::size_t gt_index = 0;
  std::vector<double> relevance;
};

// gt surface form (relevance 1.0) + "it is <gt>" paraphrase (0.8) + C-2
// distractors drawn from the answer-type pool, padded with color words for
// size questions. Candidate sets never depend on which pool word is correct.
CandidateSet build_candidates(const Vocabulary& v, QuestionKind kind, const std::string& answer,
                              std::size_t c, std::mt19937_64& rng) {
  auto plain = [&](const std::string& w) { return words(v, {w}); };
  auto para = [&](const std::string& w) { return words(v, {"it", "is", w}); };

  std::vector<std::pair<TokenIds, double>> entries;
  entries.emplace_back(plain(answer), 1.0);
  entries.emplace_back(para(answer), 0.8);

  std::vector<TokenIds> others;
  auto push_word = [&](const std::string& w) {
    if (w == answer) return;
    others.push_back(plain(w));
    others.push_back(para(w));
  };
  if (kind == QuestionKind::color) {
    for (const auto& w : color_pool()) push_word(w);
  } else {
    for (const auto& w : size_pool()) push_word(w);
    for (const auto& w : color_pool()) push_word(w);
  }
  if (c < 2 || c > others.size() + 2)
    throw std::invalid_argument("candidate count " + std::to_string(c) +
                                " outside the distinct-candidate range [2, " +
                                std::to_string(others.size() + 2) + "]");
  fy_shuffle(others, rng);
  for (std::size_t i = 0; i + 2 < c; ++i) entries.emplace_back(std::move(others[i]), 0.0);

  fy_shuffle(entries, rng);
  CandidateSet set;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].second == 1.0) set.gt_index = i;
    set.candidates.push_back(std::move(entries[i].first));
    set.relevance.push_back(entries[i].second);
  }
  return set;
}

std::size_t plain_candidate_index(const Dataset& dataset, const RoundData& round,
                                  const std::string& word) {
  const TokenIds target = {dataset.vocab.lookup(word)};
  for (std::size_t i = 0; i < round.candidates.size(); ++i)
    if (round.candidates[i] == target) return i;
  throw data_error("oracle: answer form '" + word + "' missing from candidates");
}

const ObjectAttrs& object_by_shape(const DialogExample& example, const std::string& shape) {
  for (const auto& obj : example.objects)
    if (obj.shape == shape) return obj;
  throw data_error("oracle: no object with shape '" + shape + "'");
}

}  // namespace

std::string to_string(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::color: return "color";
    case QuestionKind::size: return "size";
    case QuestionKind::pronoun_size: return "pronoun_size";
  }
  throw std::invalid_argument("unknown question kind");
}

QuestionKind question_kind_from_string(const std::string& text) {
  if (text == "color") return QuestionKind::color;
  if (text == "size") return QuestionKind::size;
  if (text == "pronoun_size") return QuestionKind::pronoun_size;
  throw data_error("unknown question kind '" + text + "'");
}

void DatasetConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(n_examples, "n_examples");
  positive(rounds, "rounds");
  positive(candidates, "candidates");
  positive(objects, "objects");
  positive(feature_dim, "feature_dim");
  positive(vocab_size, "vocab_size");
  if (std::abs(train_ratio + val_ratio - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must sum to 1");
  if (train_ratio <= 0.0 || val_ratio <= 0.0)
    throw std::invalid_argument("split ratios must be positive");
  if (history_fraction < 0.0 || history_fraction > 1.0)
    throw std::invalid_argument("history_fraction must lie in [0,1]");
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");
  if (objects < rounds)
    throw std::invalid_argument("objects must be >= rounds so every round has a fresh subject");
  if (objects > shape_pool().size() || objects > color_pool().size())
    throw std::invalid_argument("objects exceeds the attribute pool size of " +
                                std::to_string(shape_pool().size()));
  if (history_fraction > 0.0 && rounds < 2)
    throw std::invalid_argument("history-dependent rounds need at least 2 rounds");
}

Dataset generate(const DatasetConfig& config) {
  config.validate();

  Dataset dataset;
  dataset.rounds = config.rounds;
  dataset.candidates = config.candidates;
  dataset.objects = config.objects;
  dataset.feature_dim = config.feature_dim;
  dataset.vocab = canonical_vocabulary();
  if (dataset.vocab.size() > config.vocab_size)
    throw std::invalid_argument("derived vocabulary (" + std::to_string(dataset.vocab.size()) +
                                " tokens) exceeds vocab_size");

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Attribute-conditioned cluster centers, shared across every image.
  auto draw_centers = [&](const std::vector<std::string>& pool) {
    std::vector<std::vector<double>> centers;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      std::vector<double> c(config.feature_dim);
      for (auto& v : c) v = 0.6 * normal(rng);
      centers.push_back(std::move(c));
    }
    return centers;
  };
  const auto shape_centers = draw_centers(shape_pool());
  const auto color_centers = draw_centers(color_pool());
  const auto size_centers = draw_centers(size_pool());

  // Stratify history-dependent dialogs inside each split so both carry the
  // configured fraction of pronoun rounds (at most one per dialog).
  const auto train_n =
      static_cast<std::size_t>(std::llround(config.train_ratio * static_cast<double>(config.n_examples)));
  std::vector<char> has_pronoun(config.n_examples, 0);
  auto assign = [&](std::size_t begin, std::size_t count) {
    const auto quota = static_cast<std::size_t>(
        std::llround(config.history_fraction * static_cast<double>(count * config.rounds)));
    if (quota > count)
      throw std::invalid_argument("history_fraction needs more than one pronoun round per dialog");
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), begin);
    fy_shuffle(idx, rng);
    for (std::size_t i = 0; i < quota; ++i) has_pronoun[idx[i]] = 1;
  };
  assign(0, train_n);
  assign(train_n, config.n_examples - train_n);

  for (std::size_t id = 0; id < config.n_examples; ++id) {
    DialogExample ex;
    ex.example_id = id;

    const auto shape_idx = sample_indices(shape_pool().size(), config.objects, rng);
    const auto color_idx = sample_indices(color_pool().size(), config.objects, rng);
    std::uniform_int_distribution<std::size_t> size_pick(0, size_pool().size() - 1);
    std::vector<double> features;
    features.reserve(config.objects * config.feature_dim);
    for (std::size_t i = 0; i < config.objects; ++i) {
      const std::size_t size_i = size_pick(rng);
      ObjectAttrs obj;
      obj.shape = shape_pool()[shape_idx[i]];
      obj.color = color_pool()[color_idx[i]];
      obj.size = size_pool()[size_i];
      for (std::size_t j = 0; j < config.feature_dim; ++j)
        features.push_back(shape_centers[shape_idx[i]][j] + color_centers[color_idx[i]][j] +
                           size_centers[size_i][j] + config.noise_sigma * normal(rng));
      ex.objects.push_back(std::move(obj));
    }
    ex.image_features = Tensor::from_data({config.objects, config.feature_dim}, features);

    // The caption names object 0 by size and shape. It never mentions a color,
    // so "that color" in a pronoun round has exactly one referent in history.
    ex.caption = words(dataset.vocab, {"a", "scene", "with", "a", ex.objects[0].size,
                                       ex.objects[0].shape});

    const bool pronoun = has_pronoun[id] != 0;
    const std::size_t subject_count = pronoun ? config.rounds - 1 : config.rounds;
    const auto subjects = sample_indices(config.objects, subject_count, rng);
    std::size_t pronoun_pos = 0;  // 1-based round of the pronoun question
    if (pronoun) {
      std::uniform_int_distribution<std::size_t> pos(2, config.rounds);
      pronoun_pos = pos(rng);
    }

    std::size_t next_subject = 0;
    std::size_t prev_subject = 0;
    for (std::size_t r = 1; r <= config.rounds; ++r) {
      RoundData round;
      std::size_t subject;
      if (pronoun && r == pronoun_pos) {
        subject = prev_subject;
        round.kind = QuestionKind::pronoun_size;
      } else {
        subject = subjects[next_subject++];
        if (pronoun) {
          // Exactly one color question per pronoun dialog, directly before the
          // pronoun round, so the reference is resolvable from content alone.
          round.kind = r == pronoun_pos - 1 ? QuestionKind::color : QuestionKind::size;
        } else {
          std::uniform_int_distribution<int> coin(0, 1);
          round.kind = coin(rng) == 0 ? QuestionKind::color : QuestionKind::size;
        }
      }
      const ObjectAttrs& obj = ex.objects[subject];
      std::string answer;
      switch (round.kind) {
        case QuestionKind::color:
          round.question = words(dataset.vocab, {"what", "color", "is", "the", obj.shape});
          answer = obj.color;
          break;
        case QuestionKind::size:
          round.question = words(dataset.vocab, {"what", "size", "is", "the", obj.shape});
          answer = obj.size;
          break;
        case QuestionKind::pronoun_size:
          round.question =
              words(dataset.vocab, {"what", "size", "is", "the", "one", "with", "that", "color"});
          answer = obj.size;
          break;
      }
      round.answer = words(dataset.vocab, {answer});
      auto set = build_candidates(dataset.vocab, round.kind, answer, config.candidates, rng);
      round.candidates = std::move(set.candidates);
      round.gt_index = set.gt_index;
      round.relevance = std::move(set.relevance);
      ex.rounds.push_back(std::move(round));
      prev_subject = subject;
    }
    dataset.examples.push_back(std::move(ex));
  }
  return dataset;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_ratio) {
  if (train_ratio <= 0.0 || train_ratio >= 1.0)
    throw std::invalid_argument("train_ratio must lie in (0,1)");
  const auto train_n = static_cast<std::size_t>(
      std::llround(train_ratio * static_cast<double>(dataset.examples.size())));
  Dataset train = dataset, val = dataset;
  train.examples.assign(dataset.examples.begin(), dataset.examples.begin() + train_n);
  val.examples.assign(dataset.examples.begin() + train_n, dataset.examples.end());
  return {std::move(train), std::move(val)};
}

double measure_history_fraction(const Dataset& dataset) {
  std::size_t total = 0, history = 0;
  for (const auto& ex : dataset.examples)
    for (const auto& round : ex.rounds) {
      ++total;
      history += round.kind == QuestionKind::pronoun_size;
    }
  if (total == 0) throw std::invalid_argument("measure_history_fraction: empty dataset");
  return static_cast<double>(history) / static_cast<double>(total);
}

std::size_t oracle_full_answer(const Dataset& dataset, const DialogExample& example,
                               std::size_t round_idx) {
  const RoundData& round = example.rounds.at(round_idx);
  if (round.kind != QuestionKind::pronoun_size) {
    const std::string shape = dataset.vocab.token(round.question.back());
    const ObjectAttrs& obj = object_by_shape(example, shape);
    return plain_candidate_index(dataset, round,
                                 round.kind == QuestionKind::color ? obj.color : obj.size);
  }
  // Resolve "that color": the most recent color-word answer in history.
  for (std::size_t j = round_idx; j-- > 0;) {
    const auto& ans = example.rounds[j].answer;
    if (ans.size() != 1) continue;
    const std::string word = dataset.vocab.token(ans[0]);
    if (!in_pool(color_pool(), word)) continue;
    for (const auto& obj : example.objects)
      if (obj.color == word) return plain_candidate_index(dataset, round, obj.size);
    throw data_error("oracle: no object with color '" + word + "'");
  }
  throw data_error("oracle: pronoun round has no color answer in history");
}

std::size_t oracle_image_only_answer(const Dataset& dataset, const DialogExample& example,
                                     std::size_t round_idx, std::mt19937_64& rng) {
  const RoundData& round = example.rounds.at(round_idx);
  if (round.kind != QuestionKind::pronoun_size)
    return oracle_full_answer(dataset, example, round_idx);
  // Without history the referent is unknowable; guess among plain size forms.
  std::vector<std::size_t> size_candidates;
  for (std::size_t i = 0; i < round.candidates.size(); ++i)
    if (round.candidates[i].size() == 1 &&
        in_pool(size_pool(), dataset.vocab.token(round.candidates[i][0])))
      size_candidates.push_back(i);
  if (size_candidates.empty()) throw data_error("oracle: no size candidates in pronoun round");
  std::uniform_int_distribution<std::size_t> pick(0, size_candidates.size() - 1);
  return size_candidates[pick(rng)];
}

std::vector<Annotation> annotations_from(const Dataset& dataset) {
  std::vector<Annotation> out;
  for (const auto& ex : dataset.examples)
    for (std::size_t r = 0; r < ex.rounds.size(); ++r) {
      Annotation a;
      a.example_id = ex.example_id;
      a.round = r + 1;
      a.gt_index = ex.rounds[r].gt_index;
      a.dense_relevance = ex.rounds[r].relevance;
      out.push_back(std::move(a));
    }
  return out;
}

DialogTokens to_dialog_tokens(const DialogExample& example) {
  DialogTokens tokens;
  tokens.caption = example.caption;
  for (const auto& round : example.rounds) {
    DialogRoundTokens rt;
    rt.question = round.question;
    rt.answer = round.answer;
    rt.candidates = round.candidates;
    tokens.rounds.push_back(std::move(rt));
  }
  return tokens;
}

namespace {

struct LineReader {
  std::istream& in;
  std::size_t line_no = 0;

  bool next(std::string& line) {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  }
  std::string require(const char* what) {
    std::string line;
    if (!next(line))
      throw data_error("line " + std::to_string(line_no + 1) +
                       ": unexpected end of file while reading " + what);
    return line;
  }
  [[noreturn]] void fail(const std::string& message) const {
    throw data_error("line " + std::to_string(line_no) + ": " + message);
  }
};

std::size_t parse_size(LineReader& r, std::istringstream& ls, const char* what) {
  long long v = 0;
  if (!(ls >> v) || v < 0) r.fail(std::string("expected ") + what);
  return static_cast<std::size_t>(v);
}

void expect_keyword(LineReader& r, std::istringstream& ls, const char* kw) {
  std::string tok;
  if (!(ls >> tok) || tok != kw) r.fail(std::string("expected keyword '") + kw + "'");
}

double parse_double_token(LineReader& r, const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    r.fail("bad float '" + tok + "'");
  return v;
}

TokenIds encode_rest(const Vocabulary& vocab, std::istringstream& ls) {
  TokenIds ids;
  std::string word;
  while (ls >> word) ids.push_back(vocab.lookup(word));
  return ids;
}

void write_tokens(std::ostream& out, const Vocabulary& vocab, const TokenIds& ids) {
  for (const auto id : ids) out << " " << vocab.token(id);
}

}  // namespace

void save_dataset(const Dataset& dataset, std::ostream& out) {
  out << "DIALRANK DATASET 1\n";
  out << "EXAMPLES " << dataset.examples.size() << " ROUNDS " << dataset.rounds << " CANDIDATES "
      << dataset.candidates << " OBJECTS " << dataset.objects << " FEATURE_DIM "
      << dataset.feature_dim << "\n";
  out << "VOCAB " << dataset.vocab.size() << "\n";
  dataset.vocab.save(out);
  for (const auto& ex : dataset.examples) {
    out << "EXAMPLE " << ex.example_id << "\n";
    out << "IMAGE\n";
    for (std::size_t i = 0; i < ex.objects.size(); ++i) {
      const auto& obj = ex.objects[i];
      out << "OBJECT " << obj.shape << " " << obj.color << " " << obj.size;
      for (std::size_t j = 0; j < dataset.feature_dim; ++j)
        out << " " << format_double(ex.image_features.at(i, j));
      out << "\n";
    }
    out << "CAPTION\n";
    bool first = true;
    for (const auto id : ex.caption) {
      out << (first ? "" : " ") << dataset.vocab.token(id);
      first = false;
    }
    out << "\n";
    for (std::size_t r = 0; r < ex.rounds.size(); ++r) {
      const auto& round = ex.rounds[r];
      out << "ROUND " << (r + 1) << " KIND " << to_string(round.kind) << " GT " << round.gt_index
          << "\n";
      out << "Q";
      write_tokens(out, dataset.vocab, round.question);
      out << "\nA";
      write_tokens(out, dataset.vocab, round.answer);
      out << "\n";
      for (const auto& cand : round.candidates) {
        out << "CAND";
        write_tokens(out, dataset.vocab, cand);
        out << "\n";
      }
      out << "REL";
      for (const double v : round.relevance) out << " " << format_double(v);
      out << "\n";
    }
  }
}

Dataset load_dataset(std::istream& in) {
  LineReader r{in};
  Dataset dataset;

  {
    const std::string line = r.require("header");
    if (line != "DIALRANK DATASET 1") r.fail("expected header 'DIALRANK DATASET 1'");
  }
  std::size_t n_examples = 0;
  {
    std::istringstream ls(r.require("dimensions"));
    expect_keyword(r, ls, "EXAMPLES");
    n_examples = parse_size(r, ls, "example count");
    expect_keyword(r, ls, "ROUNDS");
    dataset.rounds = parse_size(r, ls, "round count");
    expect_keyword(r, ls, "CANDIDATES");
    dataset.candidates = parse_size(r, ls, "candidate count");
    expect_keyword(r, ls, "OBJECTS");
    dataset.objects = parse_size(r, ls, "object count");
    expect_keyword(r, ls, "FEATURE_DIM");
    dataset.feature_dim = parse_size(r, ls, "feature dimension");
  }
  std::size_t vocab_n = 0;
  {
    std::istringstream ls(r.require("vocabulary size"));
    expect_keyword(r, ls, "VOCAB");
    vocab_n = parse_size(r, ls, "vocabulary size");
  }
  if (vocab_n < 2) r.fail("vocabulary must hold the reserved tokens");
  for (std::size_t i = 0; i < vocab_n; ++i) {
    const std::string tok = r.require("vocabulary entry");
    if (i == Vocabulary::kPad && tok != "<pad>") r.fail("vocabulary row 0 must be <pad>");
    if (i == Vocabulary::kUnk && tok != "<unk>") r.fail("vocabulary row 1 must be <unk>");
    if (i < 2) continue;
    if (dataset.vocab.add(tok) != i) r.fail("duplicate vocabulary token '" + tok + "'");
  }

  for (std::size_t e = 0; e < n_examples; ++e) {
    DialogExample ex;
    {
      std::istringstream ls(r.require("EXAMPLE header"));
      expect_keyword(r, ls, "EXAMPLE");
      ex.example_id = parse_size(r, ls, "example id");
    }
    if (r.require("IMAGE header") != "IMAGE") r.fail("expected 'IMAGE'");
    std::vector<double> features;
    features.reserve(dataset.objects * dataset.feature_dim);
    for (std::size_t i = 0; i < dataset.objects; ++i) {
      std::istringstream ls(r.require("OBJECT line"));
      expect_keyword(r, ls, "OBJECT");
      ObjectAttrs obj;
      if (!(ls >> obj.shape >> obj.color >> obj.size)) r.fail("expected shape, color, size");
      std::string tok;
      std::size_t got = 0;
      while (ls >> tok) {
        features.push_back(parse_double_token(r, tok));
        ++got;
      }
      if (got != dataset.feature_dim)
        r.fail("expected " + std::to_string(dataset.feature_dim) + " feature values, got " +
               std::to_string(got));
      ex.objects.push_back(std::move(obj));
    }
    ex.image_features = Tensor::from_data({dataset.objects, dataset.feature_dim}, features);
    if (r.require("CAPTION header") != "CAPTION") r.fail("expected 'CAPTION'");
    {
      std::istringstream ls(r.require("caption text"));
      ex.caption = encode_rest(dataset.vocab, ls);
    }
    for (std::size_t round_no = 1; round_no <= dataset.rounds; ++round_no) {
      RoundData round;
      {
        std::istringstream ls(r.require("ROUND header"));
        expect_keyword(r, ls, "ROUND");
        if (parse_size(r, ls, "round number") != round_no)
          r.fail("rounds must be numbered consecutively from 1");
        expect_keyword(r, ls, "KIND");
        std::string kind;
        if (!(ls >> kind)) r.fail("expected question kind");
        try {
          round.kind = question_kind_from_string(kind);
        } catch (const data_error& e) {
          r.fail(e.what());
        }
        expect_keyword(r, ls, "GT");
        round.gt_index = parse_size(r, ls, "gt index");
        if (round.gt_index >= dataset.candidates) r.fail("gt index outside candidate range");
      }
      {
        std::istringstream ls(r.require("question line"));
        expect_keyword(r, ls, "Q");
        round.question = encode_rest(dataset.vocab, ls);
      }
      {
        std::istringstream ls(r.require("answer line"));
        expect_keyword(r, ls, "A");
        round.answer = encode_rest(dataset.vocab, ls);
      }
      for (std::size_t c = 0; c < dataset.candidates; ++c) {
        std::istringstream ls(r.require("candidate line"));
        expect_keyword(r, ls, "CAND");
        round.candidates.push_back(encode_rest(dataset.vocab, ls));
      }
      {
        std::istringstream ls(r.require("relevance line"));
        expect_keyword(r, ls, "REL");
        std::string tok;
        while (ls >> tok) round.relevance.push_back(parse_double_token(r, tok));
        if (round.relevance.size() != dataset.candidates)
          r.fail("expected " + std::to_string(dataset.candidates) + " relevance values, got " +
                 std::to_string(round.relevance.size()));
        for (const double v : round.relevance)
          if (v < 0.0 || v > 1.0) r.fail("relevance outside [0,1]");
        if (round.relevance[round.gt_index] != 1.0) r.fail("gt relevance must be 1");
      }
      ex.rounds.push_back(std::move(round));
    }
    dataset.examples.push_back(std::move(ex));
  }
  std::string extra;
  if (r.next(extra)) r.fail("trailing content after the final example");
  return dataset;
}

void save_dataset_file(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write dataset file '" + path + "'");
  save_dataset(dataset, out);
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot read dataset file '" + path + "'");
  try {
    return load_dataset(in);
  } catch (const data_error& e) {
    throw data_error(path + ": " + e.what());
  }
}

Dataset convert_external_release(const std::string& path) {
  throw data_error("conversion from the public release JSON ('" + path +
                   "') is documented but not implemented; use the generator");
}

}  // namespace dialrank
