#include "dialrank/fusion.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

#include "dialrank/errors.hpp"

namespace dialrank {

std::string to_string(LogitSource source) {
  switch (source) {
    case LogitSource::image_only: return "image_only";
    case LogitSource::joint: return "joint";
    case LogitSource::fused: return "fused";
    case LogitSource::ensemble: return "ensemble";
  }
  return "fused";
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view text, std::size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw data_error("logit file line " + std::to_string(line_no) + ": bad float '" +
                     std::string(text) + "'");
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

void LogitMatrix::save(std::ostream& out) const {
  out << "C=" << candidate_count << " INSTANCES=" << rows.size() << "\n";
  for (const auto& row : rows) {
    out << row.example_id << " " << row.round;
    for (double v : row.scores) out << " " << format_double(v);
    out << "\n";
  }
}

LogitMatrix LogitMatrix::load(std::istream& in) {
  LogitMatrix m;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw data_error("logit file: empty");
  ++line_no;
  std::size_t instances = 0;
  {
    std::istringstream hs(line);
    std::string tok;
    bool have_c = false, have_n = false;
    while (hs >> tok) {
      if (tok.rfind("C=", 0) == 0) {
        m.candidate_count = std::stoul(tok.substr(2));
        have_c = true;
      } else if (tok.rfind("INSTANCES=", 0) == 0) {
        instances = std::stoul(tok.substr(10));
        have_n = true;
      } else {
        throw data_error("logit file line 1: unknown header field '" + tok + "'");
      }
    }
    if (!have_c || !have_n)
      throw data_error("logit file line 1: header must carry C= and INSTANCES=");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_ws(line);
    if (fields.size() != 2 + m.candidate_count)
      throw data_error("logit file line " + std::to_string(line_no) + ": expected " +
                       std::to_string(2 + m.candidate_count) + " fields, got " +
                       std::to_string(fields.size()));
    LogitRow row;
    row.example_id = static_cast<std::size_t>(parse_double(fields[0], line_no));
    row.round = static_cast<std::size_t>(parse_double(fields[1], line_no));
    row.scores.reserve(m.candidate_count);
    for (std::size_t i = 0; i < m.candidate_count; ++i)
      row.scores.push_back(parse_double(fields[2 + i], line_no));
    m.rows.push_back(std::move(row));
  }
  if (m.rows.size() != instances)
    throw data_error("logit file: header says " + std::to_string(instances) +
                     " instances but found " + std::to_string(m.rows.size()));
  return m;
}

void LogitMatrix::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write logit file '" + path + "'");
  save(out);
}

LogitMatrix LogitMatrix::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot read logit file '" + path + "'");
  try {
    return load(in);
  } catch (const data_error& e) {
    throw data_error(path + ": " + e.what());
  }
}

namespace {

void check_aligned(const LogitMatrix& a, const LogitMatrix& b, const char* op) {
  if (a.candidate_count != b.candidate_count || a.rows.size() != b.rows.size())
    throw data_error(std::string(op) + ": shapes disagree (C=" +
                     std::to_string(a.candidate_count) + ", n=" + std::to_string(a.rows.size()) +
                     ") vs (C=" + std::to_string(b.candidate_count) + ", n=" +
                     std::to_string(b.rows.size()) + ")");
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].example_id != b.rows[i].example_id || a.rows[i].round != b.rows[i].round)
      throw data_error(std::string(op) + ": row " + std::to_string(i) +
                       " instance ids disagree: (" + std::to_string(a.rows[i].example_id) + "," +
                       std::to_string(a.rows[i].round) + ") vs (" +
                       std::to_string(b.rows[i].example_id) + "," +
                       std::to_string(b.rows[i].round) + ")");
  }
}

}  // namespace

LogitMatrix consensus(const LogitMatrix& image_only, const LogitMatrix& joint) {
  check_aligned(image_only, joint, "consensus");
  LogitMatrix out;
  out.candidate_count = image_only.candidate_count;
  out.source = LogitSource::fused;
  out.rows.reserve(image_only.rows.size());
  for (std::size_t i = 0; i < image_only.rows.size(); ++i) {
    LogitRow row = image_only.rows[i];
    for (std::size_t j = 0; j < row.scores.size(); ++j)
      row.scores[j] += joint.rows[i].scores[j];
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<double> instance_dropout_mask(std::size_t n_rows, double p, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0)
    throw std::invalid_argument("instance_dropout: p must be in [0,1), got " +
                                std::to_string(p));
  std::vector<double> mask(n_rows, 1.0);
  if (p == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - p);
  std::bernoulli_distribution drop(p);
  for (auto& m : mask) m = drop(rng) ? 0.0 : keep_scale;
  return mask;
}

LogitMatrix instance_dropout(const LogitMatrix& joint, double p, std::mt19937_64& rng) {
  auto mask = instance_dropout_mask(joint.rows.size(), p, rng);
  if (p == 0.0) return joint;
  LogitMatrix out = joint;
  for (std::size_t i = 0; i < out.rows.size(); ++i)
    for (auto& v : out.rows[i].scores) v *= mask[i];
  return out;
}

EnsembleRanking ensemble(const std::vector<LogitMatrix>& models) {
  if (models.empty()) throw data_error("ensemble: no logit matrices");
  for (std::size_t i = 1; i < models.size(); ++i)
    check_aligned(models[0], models[i], "ensemble");
  EnsembleRanking out;
  const std::size_t c = models[0].candidate_count;
  out.summed.reserve(models[0].rows.size());
  for (std::size_t i = 0; i < models[0].rows.size(); ++i) {
    LogitRow row = models[0].rows[i];
    for (std::size_t mi = 1; mi < models.size(); ++mi)
      for (std::size_t j = 0; j < c; ++j) row.scores[j] += models[mi].rows[i].scores[j];
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return row.scores[a] > row.scores[b];
    });
    out.summed.push_back(std::move(row));
    out.order.push_back(std::move(order));
  }
  return out;
}

}  // namespace dialrank
