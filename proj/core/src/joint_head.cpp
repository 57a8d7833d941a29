#include "dialrank/joint_head.hpp"

#include <algorithm>
#include <stdexcept>

namespace dialrank {

Tensor similarity(const Tensor& objects, const Tensor& history, const Tensor& w_s) {
  if (objects.rank() != 2 || history.rank() != 2 || objects.dim(1) != history.dim(1))
    throw std::invalid_argument("similarity: objects " + shape_str(objects.shape()) +
                                " vs history " + shape_str(history.shape()));
  const std::size_t d = objects.dim(1);
  if (w_s.rank() != 1 || w_s.dim(0) != 3 * d)
    throw std::invalid_argument("similarity: w_s " + shape_str(w_s.shape()) + " must be [" +
                                std::to_string(3 * d) + "]");
  const std::size_t k = objects.dim(0);
  const std::size_t r = history.dim(0);
  Tensor w1 = slice(w_s, 0, d);
  Tensor w2 = slice(w_s, d, d);
  Tensor w3 = slice(w_s, 2 * d, d);
  Tensor t1 = broadcast_cols(matvec(objects, w1), r);                      // (V_i·w1)
  Tensor t2 = broadcast_rows(matvec(history, w2), k);                      // (H_j·w2)
  Tensor t3 = matmul(mul(objects, broadcast_rows(w3, k)), transpose(history));
  return add(add(t1, t2), t3);
}

Tensor fuse_history(const Tensor& objects, const Tensor& history, const Tensor& sim) {
  if (sim.dim(0) != objects.dim(0) || sim.dim(1) != history.dim(0))
    throw std::invalid_argument("fuse_history: similarity " + shape_str(sim.shape()) +
                                " vs objects " + shape_str(objects.shape()) + " and history " +
                                shape_str(history.shape()));
  Tensor attended = matmul(softmax(transpose(sim), 1), objects);  // [r×d]
  return concat_cols({history, attended, mul(history, attended)});
}

Tensor fuse_visual(const Tensor& objects, const Tensor& history, const Tensor& sim) {
  if (sim.dim(0) != objects.dim(0) || sim.dim(1) != history.dim(0))
    throw std::invalid_argument("fuse_visual: similarity " + shape_str(sim.shape()) +
                                " vs objects " + shape_str(objects.shape()) + " and history " +
                                shape_str(history.shape()));
  Tensor attended = matmul(softmax(sim, 1), history);  // [k×d]
  return concat_cols({objects, attended, mul(objects, attended)});
}

Tensor joint_forward(const Tensor& fused_visual, const Tensor& fused_history, const Tensor& q,
                     const Tensor& candidates, const JointParams& params) {
  if (candidates.rank() != 2 || candidates.dim(0) == 0)
    throw std::invalid_argument("joint_forward: no candidates");
  Tensor v_pooled = mfb(fused_visual, q, params.mfb_vis);
  Tensor v_feat = attend(v_pooled, fused_visual, params.mfb_vis);  // [3d]
  Tensor h_pooled = mfb(fused_history, q, params.mfb_hist);
  Tensor h_feat = attend(h_pooled, fused_history, params.mfb_hist);  // [3d]

  Tensor fq = linear(params.fc_q, q);
  Tensor f_v = mul(linear(params.fc_v, v_feat), fq);
  Tensor f_h = mul(linear(params.fc_h, h_feat), fq);
  Tensor f = linear(params.fc_f, concat({f_v, f_h}));
  return matvec(candidates, f);
}

Tensor joint_head_forward(const Tensor& objects, const Tensor& history, const Tensor& q,
                          const Tensor& candidates, const JointParams& params) {
  Tensor sim = similarity(objects, history, params.w_s);
  Tensor fused_v = fuse_visual(objects, history, sim);
  Tensor fused_h = fuse_history(objects, history, sim);
  return joint_forward(fused_v, fused_h, q, candidates, params);
}

RoundDropoutPlan round_dropout(std::size_t round, std::size_t available_history,
                               std::mt19937_64& rng) {
  if (available_history < 1)
    throw std::invalid_argument("round_dropout: no history rows available");
  RoundDropoutPlan plan;
  plan.round = round;
  plan.available = available_history;
  plan.drop_count = available_history <= 5
                        ? (available_history > 2 ? available_history - 2 : 0)
                        : 3;
  // QA rows are indices 1..N_h-1; the caption at index 0 stays.
  std::vector<std::size_t> qa_rows;
  for (std::size_t i = 1; i < available_history; ++i) qa_rows.push_back(i);
  for (std::size_t i = 0; i < plan.drop_count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, qa_rows.size() - 1);
    std::swap(qa_rows[i], qa_rows[pick(rng)]);
    plan.dropped.push_back(qa_rows[i]);
  }
  std::sort(plan.dropped.begin(), plan.dropped.end());
  return plan;
}

Tensor apply_round_dropout(const Tensor& history, const RoundDropoutPlan& plan) {
  if (history.dim(0) != plan.available)
    throw std::invalid_argument("apply_round_dropout: history " + shape_str(history.shape()) +
                                " vs plan for " + std::to_string(plan.available) + " rows");
  if (plan.dropped.empty()) return history;
  std::vector<Tensor> kept;
  std::size_t next_drop = 0;
  for (std::size_t i = 0; i < history.dim(0); ++i) {
    if (next_drop < plan.dropped.size() && plan.dropped[next_drop] == i) {
      ++next_drop;
      continue;
    }
    kept.push_back(row(history, i));
  }
  return stack_rows(kept);
}

Tensor truncate_history(const Tensor& history, std::size_t keep_last_k) {
  const std::size_t rows = history.dim(0);
  const std::size_t qa_rows = rows - 1;
  if (keep_last_k >= qa_rows) return history;
  std::vector<Tensor> kept;
  kept.push_back(row(history, 0));
  for (std::size_t i = rows - keep_last_k; i < rows; ++i) kept.push_back(row(history, i));
  return stack_rows(kept);
}

}  // namespace dialrank
