#include "dialrank/image_only_head.hpp"

#include <stdexcept>

namespace dialrank {

Tensor linear(const LinearParams& fc, const Tensor& x) {
  return add(matvec(fc.w, x), fc.b);
}

Tensor project_visual(const Tensor& v_rcnn, const LinearParams& visual_proj) {
  if (v_rcnn.rank() != 2 || v_rcnn.dim(1) != visual_proj.in_size())
    throw std::invalid_argument("project_visual: features " + shape_str(v_rcnn.shape()) +
                                " vs projection " + shape_str(visual_proj.w.shape()));
  const std::size_t k = v_rcnn.dim(0);
  Tensor projected = matmul(v_rcnn, transpose(visual_proj.w));
  return add(projected, broadcast_rows(visual_proj.b, k));
}

Tensor mfb(const Tensor& items, const Tensor& query, const MfbParams& params) {
  if (items.rank() != 2 || items.dim(1) != params.item_dim())
    throw std::invalid_argument("mfb: items " + shape_str(items.shape()) + " vs factors " +
                                shape_str(params.factors_x[0].shape()));
  if (query.rank() != 1 || query.dim(0) != params.query_dim())
    throw std::invalid_argument("mfb: query " + shape_str(query.shape()) + " vs factors " +
                                shape_str(params.factors_q[0].shape()));
  const std::size_t k = items.dim(0);
  Tensor items_t = transpose(items);
  Tensor z;
  for (std::size_t i = 0; i < params.factor_count(); ++i) {
    Tensor mx = matmul(params.factors_x[i], items_t);       // [d_m×k]
    Tensor nq = matvec(params.factors_q[i], query);         // [d_m]
    Tensor term = transpose(mul(mx, broadcast_cols(nq, k)));  // [k×d_m]
    z = z.defined() ? add(z, term) : term;
  }
  return l2_normalize(power_norm(z), 1);
}

Tensor attend(const Tensor& pooled, const Tensor& items, const MfbParams& params) {
  if (pooled.dim(0) != items.dim(0))
    throw std::invalid_argument("attend: pooled " + shape_str(pooled.shape()) + " vs items " +
                                shape_str(items.shape()));
  Tensor logits = matmul(params.attn_proj, transpose(pooled));  // [1×k]
  Tensor alpha = softmax(logits, 1);
  return reshape(matmul(alpha, items), {items.dim(1)});
}

Tensor fuse_and_score(const Tensor& v, const Tensor& q, const Tensor& candidates,
                      const ImageOnlyParams& params) {
  if (candidates.rank() != 2 || candidates.dim(0) == 0)
    throw std::invalid_argument("fuse_and_score: no candidates");
  Tensor fused = mul(linear(params.fc_v, v), linear(params.fc_q, q));
  Tensor f = linear(params.fc_f, fused);
  return matvec(candidates, f);
}

Tensor image_only_forward(const Tensor& objects, const Tensor& q, const Tensor& candidates,
                          const ImageOnlyParams& params) {
  Tensor pooled = mfb(objects, q, params.mfb);
  Tensor v = attend(pooled, objects, params.mfb);
  return fuse_and_score(v, q, candidates, params);
}

}  // namespace dialrank
