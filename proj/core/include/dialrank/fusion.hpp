#pragma once

#include <cstddef>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace dialrank {

enum class LogitSource { image_only, joint, fused, ensemble };

std::string to_string(LogitSource source);

// One (example, round) instance's scores over the candidate set.
struct LogitRow {
  std::size_t example_id = 0;
  std::size_t round = 0;
  std::vector<double> scores;
};

// Per-instance candidate scores for a whole split, one row per instance.
struct LogitMatrix {
  std::size_t candidate_count = 0;
  LogitSource source = LogitSource::fused;
  std::vector<LogitRow> rows;

  // Header `C=<int> INSTANCES=<int>`, then `<example_id> <round> <C floats>`
  // per row. Floats use shortest round-trip decimals, so save→load→save is
  // byte-identical.
  void save(std::ostream& out) const;
  static LogitMatrix load(std::istream& in);
  void save_file(const std::string& path) const;
  static LogitMatrix load_file(const std::string& path);
};

// Elementwise sum of aligned logit matrices.
LogitMatrix consensus(const LogitMatrix& image_only, const LogitMatrix& joint);

// Inverted-dropout row mask: entries are 0 with probability p, else 1/(1−p).
std::vector<double> instance_dropout_mask(std::size_t n_rows, double p, std::mt19937_64& rng);

// Whole rows of the joint logits zeroed or rescaled by the mask.
LogitMatrix instance_dropout(const LogitMatrix& joint, double p, std::mt19937_64& rng);

// Candidate order per instance by descending summed logit; ties go to the
// lower candidate index.
struct EnsembleRanking {
  std::vector<LogitRow> summed;                       // aligned with inputs
  std::vector<std::vector<std::size_t>> order;        // per row: candidate ids, best first
};

EnsembleRanking ensemble(const std::vector<LogitMatrix>& models);

// Shortest decimal that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace dialrank
