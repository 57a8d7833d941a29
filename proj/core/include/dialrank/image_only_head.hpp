#pragma once

#include <cstddef>
#include <vector>

#include "dialrank/tensor.hpp"

namespace dialrank {

// Affine map y = W x + b with W stored [out×in].
struct LinearParams {
  Tensor w;
  Tensor b;

  std::size_t out_size() const { return w.dim(0); }
  std::size_t in_size() const { return w.dim(1); }
};

Tensor linear(const LinearParams& fc, const Tensor& x);

// Low-rank bilinear pooling factors. factors_x[i] is [d_m×d_x] and applies to
// the item matrix; factors_q[i] is [d_m×d_q] and applies to the query vector.
// attn_proj is the [1×d_m] projection that turns pooled rows into attention
// logits. For the image-only head d_x == d_q; the joint head widens d_x to 3d.
struct MfbParams {
  std::vector<Tensor> factors_x;
  std::vector<Tensor> factors_q;
  Tensor attn_proj;  // [1×d_m]

  std::size_t factor_count() const { return factors_x.size(); }
  std::size_t fused_dim() const { return factors_x.empty() ? 0 : factors_x[0].dim(0); }
  std::size_t item_dim() const { return factors_x.empty() ? 0 : factors_x[0].dim(1); }
  std::size_t query_dim() const { return factors_q.empty() ? 0 : factors_q[0].dim(1); }
};

struct ImageOnlyParams {
  LinearParams visual_proj;  // d_v → d
  MfbParams mfb;
  LinearParams fc_v;  // d → d
  LinearParams fc_q;  // d → d
  LinearParams fc_f;  // d → d
};

// V = visual_proj(V_rcnn): [k×d_v] → [k×d].
Tensor project_visual(const Tensor& v_rcnn, const LinearParams& visual_proj);

// Factor-summed bilinear pooling of each item row against the query, followed
// by signed sqrt and per-row ℓ2 normalization. [k×d_x], [d_q] → [k×d_m].
Tensor mfb(const Tensor& items, const Tensor& query, const MfbParams& params);

// Attention logits from pooled rows, softmax over items, weighted row sum.
// [k×d_m], [k×d] → [d].
Tensor attend(const Tensor& pooled, const Tensor& items, const MfbParams& params);

// f = fc_f(fc_v(v) ⊙ fc_q(q)); score per candidate is the dot product f·a_l.
// Returns one logit row [C].
Tensor fuse_and_score(const Tensor& v, const Tensor& q, const Tensor& candidates,
                      const ImageOnlyParams& params);

// Full head: projected objects + question + candidates → logit row [C].
Tensor image_only_forward(const Tensor& objects, const Tensor& q, const Tensor& candidates,
                          const ImageOnlyParams& params);

}  // namespace dialrank
