#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dialrank {

// One evaluated instance: the model's candidate scores, the single
// ground-truth index, and optional per-candidate relevance in [0,1].
struct RankedInstance {
  std::size_t example_id = 0;
  std::size_t round = 0;
  std::vector<double> scores;
  std::size_t gt_index = 0;
  std::optional<std::vector<double>> dense_relevance;
};

struct MetricReport {
  double ndcg = 0.0;
  double mrr = 0.0;
  double r_at_1 = 0.0;
  double r_at_5 = 0.0;
  double r_at_10 = 0.0;
  double mean_rank = 0.0;
  std::size_t n_instances = 0;
};

// 1-based rank of the ground-truth candidate. Ties are broken by candidate
// index: equal-scored candidates with a lower index rank ahead.
std::size_t rank_of(const std::vector<double>& scores, std::size_t gt_index);

double mrr(const std::vector<RankedInstance>& instances);
double recall_at(const std::vector<RankedInstance>& instances, std::size_t k);
double mean_rank(const std::vector<RankedInstance>& instances);

// Top-K NDCG with K = count of candidates with positive relevance, discount
// log2(rank+1), candidate order by score with the same index tie-break.
double ndcg(const RankedInstance& instance);

MetricReport evaluate(const std::vector<RankedInstance>& instances);

// How far two models' correct answers overlap: R@1 counted on instances both
// or either model gets right; NDCG aggregated from per-instance min/max.
struct ComplementarityReport {
  double r1_a = 0.0;
  double r1_b = 0.0;
  double r1_intersection = 0.0;
  double r1_union = 0.0;
  double ndcg_a = 0.0;
  double ndcg_b = 0.0;
  double ndcg_intersection = 0.0;
  double ndcg_union = 0.0;
};

ComplementarityReport complementarity(const std::vector<RankedInstance>& model_a,
                                      const std::vector<RankedInstance>& model_b);

// Annotations file: one line per instance,
// `<example_id> <round> <gt_index> [<C relevance floats>]`.
struct Annotation {
  std::size_t example_id = 0;
  std::size_t round = 0;
  std::size_t gt_index = 0;
  std::optional<std::vector<double>> dense_relevance;
};

void save_annotations(const std::vector<Annotation>& annotations, std::ostream& out);
std::vector<Annotation> load_annotations(std::istream& in);
std::vector<Annotation> load_annotations_file(const std::string& path);
void save_annotations_file(const std::vector<Annotation>& annotations, const std::string& path);

// Joins every logit row with its annotation by (example_id, round); throws
// data_error when a row has no annotation or the candidate counts disagree.
struct LogitMatrix;
std::vector<RankedInstance> join_instances(const LogitMatrix& logits,
                                           const std::vector<Annotation>& annotations);

}  // namespace dialrank
