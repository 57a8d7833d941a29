#include "dialrank/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "dialrank/errors.hpp"
#include "dialrank/fusion.hpp"

namespace dialrank {

std::size_t rank_of(const std::vector<double>& scores, std::size_t gt_index) {
  if (scores.empty()) throw std::invalid_argument("rank_of: empty score vector");
  if (gt_index >= scores.size())
    throw std::invalid_argument("rank_of: gt index " + std::to_string(gt_index) + " out of " +
                                std::to_string(scores.size()) + " candidates");
  const double gt = scores[gt_index];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > gt) ++rank;
    else if (scores[j] == gt && j < gt_index) ++rank;
  }
  return rank;
}

double mrr(const std::vector<RankedInstance>& instances) {
  if (instances.empty()) throw std::invalid_argument("mrr: no instances");
  double acc = 0.0;
  for (const auto& inst : instances) acc += 1.0 / static_cast<double>(rank_of(inst.scores, inst.gt_index));
  return acc / static_cast<double>(instances.size());
}

double recall_at(const std::vector<RankedInstance>& instances, std::size_t k) {
  if (instances.empty()) throw std::invalid_argument("recall_at: no instances");
  std::size_t hits = 0;
  for (const auto& inst : instances)
    if (rank_of(inst.scores, inst.gt_index) <= k) ++hits;
  return static_cast<double>(hits) / static_cast<double>(instances.size());
}

double mean_rank(const std::vector<RankedInstance>& instances) {
  if (instances.empty()) throw std::invalid_argument("mean_rank: no instances");
  double acc = 0.0;
  for (const auto& inst : instances) acc += static_cast<double>(rank_of(inst.scores, inst.gt_index));
  return acc / static_cast<double>(instances.size());
}

double ndcg(const RankedInstance& instance) {
  if (!instance.dense_relevance)
    throw std::invalid_argument("ndcg: instance has no dense relevance");
  const auto& rel = *instance.dense_relevance;
  if (rel.size() != instance.scores.size())
    throw std::invalid_argument("ndcg: relevance size " + std::to_string(rel.size()) +
                                " vs " + std::to_string(instance.scores.size()) + " scores");
  std::size_t k = 0;
  for (double v : rel)
    if (v > 0.0) ++k;
  if (k == 0) throw std::invalid_argument("ndcg: all-zero relevance");

  std::vector<std::size_t> order(instance.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return instance.scores[a] > instance.scores[b];
  });

  double dcg = 0.0;
  for (std::size_t i = 0; i < k; ++i) dcg += rel[order[i]] / std::log2(static_cast<double>(i) + 2.0);

  std::vector<double> ideal = rel;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < k; ++i) idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

MetricReport evaluate(const std::vector<RankedInstance>& instances) {
  if (instances.empty()) throw std::invalid_argument("evaluate: no instances");
  MetricReport report;
  report.n_instances = instances.size();
  report.mrr = mrr(instances);
  report.r_at_1 = recall_at(instances, 1);
  report.r_at_5 = recall_at(instances, 5);
  report.r_at_10 = recall_at(instances, 10);
  report.mean_rank = mean_rank(instances);
  double ndcg_acc = 0.0;
  std::size_t ndcg_n = 0;
  for (const auto& inst : instances) {
    if (!inst.dense_relevance) continue;
    ndcg_acc += ndcg(inst);
    ++ndcg_n;
  }
  report.ndcg = ndcg_n > 0 ? ndcg_acc / static_cast<double>(ndcg_n) : 0.0;
  return report;
}

ComplementarityReport complementarity(const std::vector<RankedInstance>& model_a,
                                      const std::vector<RankedInstance>& model_b) {
  if (model_a.size() != model_b.size() || model_a.empty())
    throw data_error("complementarity: instance sets disagree (" +
                     std::to_string(model_a.size()) + " vs " + std::to_string(model_b.size()) +
                     ")");
  ComplementarityReport rep;
  std::size_t a_hits = 0, b_hits = 0, both = 0, either = 0;
  double ndcg_a = 0.0, ndcg_b = 0.0, ndcg_min = 0.0, ndcg_max = 0.0;
  std::size_t ndcg_n = 0;
  for (std::size_t i = 0; i < model_a.size(); ++i) {
    const auto& a = model_a[i];
    const auto& b = model_b[i];
    if (a.example_id != b.example_id || a.round != b.round || a.gt_index != b.gt_index)
      throw data_error("complementarity: instance " + std::to_string(i) + " is misaligned");
    const bool a_ok = rank_of(a.scores, a.gt_index) == 1;
    const bool b_ok = rank_of(b.scores, b.gt_index) == 1;
    a_hits += a_ok;
    b_hits += b_ok;
    both += a_ok && b_ok;
    either += a_ok || b_ok;
    if (a.dense_relevance && b.dense_relevance) {
      const double na = ndcg(a);
      const double nb = ndcg(b);
      ndcg_a += na;
      ndcg_b += nb;
      ndcg_min += std::min(na, nb);
      ndcg_max += std::max(na, nb);
      ++ndcg_n;
    }
  }
  const double n = static_cast<double>(model_a.size());
  rep.r1_a = a_hits / n;
  rep.r1_b = b_hits / n;
  rep.r1_intersection = both / n;
  rep.r1_union = either / n;
  if (ndcg_n > 0) {
    rep.ndcg_a = ndcg_a / ndcg_n;
    rep.ndcg_b = ndcg_b / ndcg_n;
    rep.ndcg_intersection = ndcg_min / ndcg_n;
    rep.ndcg_union = ndcg_max / ndcg_n;
  }
  return rep;
}

void save_annotations(const std::vector<Annotation>& annotations, std::ostream& out) {
  for (const auto& a : annotations) {
    out << a.example_id << " " << a.round << " " << a.gt_index;
    if (a.dense_relevance)
      for (double v : *a.dense_relevance) out << " " << format_double(v);
    out << "\n";
  }
}

std::vector<Annotation> load_annotations(std::istream& in) {
  std::vector<Annotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Annotation a;
    if (!(ls >> a.example_id >> a.round >> a.gt_index))
      throw data_error("annotations line " + std::to_string(line_no) +
                       ": expected `<example_id> <round> <gt_index> [rel...]`");
    std::vector<double> rel;
    std::string tok;
    while (ls >> tok) {
      double v = 0.0;
      auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw data_error("annotations line " + std::to_string(line_no) + ": bad float '" + tok +
                         "'");
      if (v < 0.0 || v > 1.0)
        throw data_error("annotations line " + std::to_string(line_no) +
                         ": relevance outside [0,1]");
      rel.push_back(v);
    }
    if (!rel.empty()) {
      if (a.gt_index >= rel.size())
        throw data_error("annotations line " + std::to_string(line_no) +
                         ": gt index outside candidate range");
      a.dense_relevance = std::move(rel);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Annotation> load_annotations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot read annotations file '" + path + "'");
  try {
    return load_annotations(in);
  } catch (const data_error& e) {
    throw data_error(path + ": " + e.what());
  }
}

void save_annotations_file(const std::vector<Annotation>& annotations, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write annotations file '" + path + "'");
  save_annotations(annotations, out);
}

std::vector<RankedInstance> join_instances(const LogitMatrix& logits,
                                           const std::vector<Annotation>& annotations) {
  std::map<std::pair<std::size_t, std::size_t>, const Annotation*> by_key;
  for (const auto& a : annotations) {
    if (!by_key.emplace(std::make_pair(a.example_id, a.round), &a).second)
      throw data_error("duplicate annotation for example " + std::to_string(a.example_id) +
                       " round " + std::to_string(a.round));
  }
  std::vector<RankedInstance> out;
  out.reserve(logits.rows.size());
  for (const auto& row : logits.rows) {
    auto it = by_key.find({row.example_id, row.round});
    if (it == by_key.end())
      throw data_error("no annotation for example " + std::to_string(row.example_id) + " round " +
                       std::to_string(row.round));
    const Annotation& a = *it->second;
    if (a.gt_index >= row.scores.size())
      throw data_error("gt index outside candidate range for example " +
                       std::to_string(row.example_id));
    if (a.dense_relevance && a.dense_relevance->size() != row.scores.size())
      throw data_error("relevance width disagrees with logits for example " +
                       std::to_string(row.example_id));
    RankedInstance inst;
    inst.example_id = row.example_id;
    inst.round = row.round;
    inst.scores = row.scores;
    inst.gt_index = a.gt_index;
    inst.dense_relevance = a.dense_relevance;
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace dialrank
