#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "dialrank/image_only_head.hpp"
#include "dialrank/tensor.hpp"

namespace dialrank {

struct JointParams {
  Tensor w_s;          // [3d] similarity weights
  MfbParams mfb_vis;   // item dim 3d, query dim d
  MfbParams mfb_hist;  // item dim 3d, query dim d
  LinearParams fc_v;   // 3d → d
  LinearParams fc_h;   // 3d → d
  LinearParams fc_q;   // d → d, shared by both branches
  LinearParams fc_f;   // 2d → d
};

// S[i][j] = w_s · [V_i; H_j; V_i ⊙ H_j]. [k×d], [r×d] → [k×r].
Tensor similarity(const Tensor& objects, const Tensor& history, const Tensor& w_s);

// Attended visual summary per history row, then [H; V^h; H ⊙ V^h].
// Softmax runs over the k objects, so each output row is a convex combination
// of object rows. [k×d], [r×d], [k×r] → [r×3d].
Tensor fuse_history(const Tensor& objects, const Tensor& history, const Tensor& sim);

// Symmetric: attended history summary per object row, then [V; H^v; V ⊙ H^v].
// Softmax runs over the r history rows. → [k×3d].
Tensor fuse_visual(const Tensor& objects, const Tensor& history, const Tensor& sim);

// Both fused matrices go through their own MFB + attention against the
// question; the two branch features are combined and scored against the
// candidates by dot product. Returns one logit row [C].
Tensor joint_forward(const Tensor& fused_visual, const Tensor& fused_history, const Tensor& q,
                     const Tensor& candidates, const JointParams& params);

// Convenience: similarity + both fusions + joint_forward.
Tensor joint_head_forward(const Tensor& objects, const Tensor& history, const Tensor& q,
                          const Tensor& candidates, const JointParams& params);

// Which history rows round dropout removes this step. Rows are 0-based over
// the current history matrix; row 0 (the caption) is never in the set.
struct RoundDropoutPlan {
  std::size_t round = 0;
  std::size_t available = 0;       // N_h: caption + QA rounds present
  std::size_t drop_count = 0;      // N_D
  std::vector<std::size_t> dropped;  // distinct QA row indices, size == drop_count
};

// N_D = max(0, N_h − 2) when N_h ≤ 5, else 3; dropped QA rows are sampled
// uniformly without replacement. Training-time only.
RoundDropoutPlan round_dropout(std::size_t round, std::size_t available_history,
                               std::mt19937_64& rng);

// History with the planned rows removed, for use ahead of similarity().
Tensor apply_round_dropout(const Tensor& history, const RoundDropoutPlan& plan);

// Caption row plus the most recent keep_last_k QA rows; a large k is a no-op.
Tensor truncate_history(const Tensor& history, std::size_t keep_last_k);

}  // namespace dialrank
