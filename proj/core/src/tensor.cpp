#include "dialrank/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dialrank {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

using Impl = std::shared_ptr<TensorImpl>;

Impl make_impl(std::vector<std::size_t> shape, std::vector<double> data) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  return impl;
}

// Registers an op on the global tape when recording and any input carries a
// gradient path. Returns true when the caller must supply a backward closure.
bool tracks(std::initializer_list<const Tensor*> inputs) {
  if (!Tape::global().recording()) return false;
  for (const Tensor* t : inputs)
    if ((*t).needs_grad()) return true;
  return false;
}

void emit(std::initializer_list<const Tensor*> inputs, Tensor& out,
          std::function<void()> backward) {
  auto& tape = Tape::global();
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (const Tensor* t : inputs) ids.push_back(tape.assign_id(*(*t).impl()));
  out.impl()->needs_grad = true;
  tape.push(std::move(ids), tape.assign_id(*out.impl()), std::move(backward));
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(op + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                              shape_str(b.shape()));
}

}  // namespace

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  auto impl = make_impl(std::move(shape), std::vector<double>(n, 0.0));
  impl->requires_grad = requires_grad;
  impl->needs_grad = requires_grad;
  return Tensor(impl);
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data,
                         bool requires_grad) {
  if (shape_numel(shape) != data.size())
    throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " does not hold " +
                                std::to_string(data.size()) + " values");
  auto impl = make_impl(std::move(shape), std::move(data));
  impl->requires_grad = requires_grad;
  impl->needs_grad = requires_grad;
  return Tensor(impl);
}

Tensor Tensor::scalar(double v) { return from_data({1}, {v}); }

double Tensor::item() const {
  if (numel() != 1)
    throw std::invalid_argument("item(): tensor " + shape_str(shape()) + " is not scalar");
  return impl_->data[0];
}

void Tensor::zero_grad() {
  if (impl_->grad.size() == impl_->data.size())
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tape& Tape::global() {
  static thread_local Tape tape;
  return tape;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw std::invalid_argument("matmul: inner dimensions disagree: " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = out.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      const double* brow = pb + l * n;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  if (tracks({&a, &b})) {
    auto ia = a.impl(), ib = b.impl(), io = out.impl();
    emit({&a, &b}, out, [ia, ib, io, m, k, n]() {
      const auto& g = io->grad_ref();
      if (ia->needs_grad) {
        auto& da = ia->grad_ref();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t l = 0; l < k; ++l) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * ib->data[l * n + j];
            da[i * k + l] += acc;
          }
      }
      if (ib->needs_grad) {
        auto& db = ib->grad_ref();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t l = 0; l < k; ++l) {
            const double av = ia->data[i * k + l];
            for (std::size_t j = 0; j < n; ++j) db[l * n + j] += av * g[i * n + j];
          }
      }
    });
  }
  return out;
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  if (a.rank() != 2 || x.rank() != 1 || a.dim(1) != x.dim(0))
    throw std::invalid_argument("matvec: dimensions disagree: " + shape_str(a.shape()) + " vs " +
                                shape_str(x.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += a.at(i, j) * x.at(j);
    out.data()[i] = acc;
  }
  if (tracks({&a, &x})) {
    auto ia = a.impl(), ix = x.impl(), io = out.impl();
    emit({&a, &x}, out, [ia, ix, io, m, n]() {
      const auto& g = io->grad_ref();
      if (ia->needs_grad) {
        auto& da = ia->grad_ref();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) da[i * n + j] += g[i] * ix->data[j];
      }
      if (ix->needs_grad) {
        auto& dx = ix->grad_ref();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) dx[j] += g[i] * ia->data[i * n + j];
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2)
    throw std::invalid_argument("transpose: expected rank 2, got " + shape_str(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.data()[j * m + i] = a.at(i, j);
  if (tracks({&a})) {
    auto ia = a.impl(), io = out.impl();
    emit({&a}, out, [ia, io, m, n]() {
      const auto& g = io->grad_ref();
      auto& da = ia->grad_ref();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) da[i * n + j] += g[j * m + i];
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a, b);
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.at(i) + b.at(i);
  if (tracks({&a, &b})) {
    auto ia = a.impl(), ib = b.impl(), io = out.impl();
    emit({&a, &b}, out, [ia, ib, io]() {
      const auto& g = io->grad_ref();
      if (ia->needs_grad) {
        auto& da = ia->grad_ref();
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (ib->needs_grad) {
        auto& db = ib->grad_ref();
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a, b);
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.at(i) * b.at(i);
  if (tracks({&a, &b})) {
    auto ia = a.impl(), ib = b.impl(), io = out.impl();
    emit({&a, &b}, out, [ia, ib, io]() {
      const auto& g = io->grad_ref();
      if (ia->needs_grad) {
        auto& da = ia->grad_ref();
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * ib->data[i];
      }
      if (ib->needs_grad) {
        auto& db = ib->grad_ref();
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * ia->data[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = c * a.at(i);
  if (tracks({&a})) {
    auto ia = a.impl(), io = out.impl();
    emit({&a}, out, [ia, io, c]() {
      const auto& g = io->grad_ref();
      auto& da = ia->grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += c * g[i];
    });
  }
  return out;
}

Tensor broadcast_rows(const Tensor& v, std::size_t k) {
  if (v.rank() != 1)
    throw std::invalid_argument("broadcast_rows: expected rank 1, got " + shape_str(v.shape()));
  const std::size_t n = v.dim(0);
  Tensor out = Tensor::zeros({k, n});
  for (std::size_t i = 0; i < k; ++i)
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + i * n);
  if (tracks({&v})) {
    auto iv = v.impl(), io = out.impl();
    emit({&v}, out, [iv, io, k, n]() {
      const auto& g = io->grad_ref();
      auto& dv = iv->grad_ref();
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j) dv[j] += g[i * n + j];
    });
  }
  return out;
}

Tensor broadcast_cols(const Tensor& v, std::size_t n) {
  if (v.rank() != 1)
    throw std::invalid_argument("broadcast_cols: expected rank 1, got " + shape_str(v.shape()));
  const std::size_t m = v.dim(0);
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.data()[i * n + j] = v.at(i);
  if (tracks({&v})) {
    auto iv = v.impl(), io = out.impl();
    emit({&v}, out, [iv, io, m, n]() {
      const auto& g = io->grad_ref();
      auto& dv = iv->grad_ref();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) dv[i] += g[i * n + j];
    });
  }
  return out;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
  const std::size_t n = rows[0].numel();
  for (const auto& r : rows)
    if (r.rank() != 1 || r.dim(0) != n) shape_error("stack_rows", rows[0], r);
  Tensor out = Tensor::zeros({rows.size(), n});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].data().begin(), rows[i].data().end(), out.data().begin() + i * n);
  bool track = false;
  for (const auto& r : rows) track = track || (Tape::global().recording() && r.needs_grad());
  if (track) {
    std::vector<Impl> impls;
    impls.reserve(rows.size());
    std::vector<int> ids;
    for (const auto& r : rows) {
      impls.push_back(r.impl());
      ids.push_back(Tape::global().assign_id(*r.impl()));
    }
    auto io = out.impl();
    out.impl()->needs_grad = true;
    Tape::global().push(std::move(ids), Tape::global().assign_id(*out.impl()),
                        [impls, io, n]() {
                          const auto& g = io->grad_ref();
                          for (std::size_t i = 0; i < impls.size(); ++i) {
                            if (!impls[i]->needs_grad) continue;
                            auto& dr = impls[i]->grad_ref();
                            for (std::size_t j = 0; j < n; ++j) dr[j] += g[i * n + j];
                          }
                        });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const std::size_t r = parts[0].dim(0);
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(0) != r) shape_error("concat_cols", parts[0], p);
    total += p.dim(1);
  }
  Tensor out = Tensor::zeros({r, total});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(1);
    for (std::size_t i = 0; i < r; ++i)
      std::copy(p.data().begin() + i * w, p.data().begin() + (i + 1) * w,
                out.data().begin() + i * total + off);
    off += w;
  }
  bool track = false;
  for (const auto& p : parts) track = track || (Tape::global().recording() && p.needs_grad());
  if (track) {
    std::vector<Impl> impls;
    std::vector<std::size_t> widths;
    std::vector<int> ids;
    for (const auto& p : parts) {
      impls.push_back(p.impl());
      widths.push_back(p.dim(1));
      ids.push_back(Tape::global().assign_id(*p.impl()));
    }
    auto io = out.impl();
    out.impl()->needs_grad = true;
    Tape::global().push(std::move(ids), Tape::global().assign_id(*out.impl()),
                        [impls, widths, io, r, total]() {
                          const auto& g = io->grad_ref();
                          std::size_t off = 0;
                          for (std::size_t pi = 0; pi < impls.size(); ++pi) {
                            const std::size_t w = widths[pi];
                            if (impls[pi]->needs_grad) {
                              auto& dp = impls[pi]->grad_ref();
                              for (std::size_t i = 0; i < r; ++i)
                                for (std::size_t j = 0; j < w; ++j)
                                  dp[i * w + j] += g[i * total + off + j];
                            }
                            off += w;
                          }
                        });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 1)
      throw std::invalid_argument("concat: expected rank 1, got " + shape_str(p.shape()));
    total += p.dim(0);
  }
  Tensor out = Tensor::zeros({total});
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out.data().begin() + off);
    off += p.numel();
  }
  bool track = false;
  for (const auto& p : parts) track = track || (Tape::global().recording() && p.needs_grad());
  if (track) {
    std::vector<Impl> impls;
    std::vector<std::size_t> lens;
    std::vector<int> ids;
    for (const auto& p : parts) {
      impls.push_back(p.impl());
      lens.push_back(p.numel());
      ids.push_back(Tape::global().assign_id(*p.impl()));
    }
    auto io = out.impl();
    out.impl()->needs_grad = true;
    Tape::global().push(std::move(ids), Tape::global().assign_id(*out.impl()),
                        [impls, lens, io]() {
                          const auto& g = io->grad_ref();
                          std::size_t off = 0;
                          for (std::size_t pi = 0; pi < impls.size(); ++pi) {
                            if (impls[pi]->needs_grad) {
                              auto& dp = impls[pi]->grad_ref();
                              for (std::size_t j = 0; j < lens[pi]; ++j) dp[j] += g[off + j];
                            }
                            off += lens[pi];
                          }
                        });
  }
  return out;
}

Tensor slice(const Tensor& v, std::size_t start, std::size_t len) {
  if (v.rank() != 1 || start + len > v.dim(0))
    throw std::invalid_argument("slice: [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") out of " + shape_str(v.shape()));
  Tensor out = Tensor::zeros({len});
  std::copy(v.data().begin() + start, v.data().begin() + start + len, out.data().begin());
  if (tracks({&v})) {
    auto iv = v.impl(), io = out.impl();
    emit({&v}, out, [iv, io, start, len]() {
      const auto& g = io->grad_ref();
      auto& dv = iv->grad_ref();
      for (std::size_t i = 0; i < len; ++i) dv[start + i] += g[i];
    });
  }
  return out;
}

Tensor row(const Tensor& m, std::size_t i) {
  if (m.rank() != 2 || i >= m.dim(0))
    throw std::invalid_argument("row: index " + std::to_string(i) + " out of " +
                                shape_str(m.shape()));
  const std::size_t n = m.dim(1);
  Tensor out = Tensor::zeros({n});
  std::copy(m.data().begin() + i * n, m.data().begin() + (i + 1) * n, out.data().begin());
  if (tracks({&m})) {
    auto im = m.impl(), io = out.impl();
    emit({&m}, out, [im, io, i, n]() {
      const auto& g = io->grad_ref();
      auto& dm = im->grad_ref();
      for (std::size_t j = 0; j < n; ++j) dm[i * n + j] += g[j];
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
  if (shape_numel(shape) != a.numel())
    throw std::invalid_argument("reshape: " + shape_str(a.shape()) + " to " + shape_str(shape) +
                                " changes element count");
  Tensor out = Tensor::from_data(std::move(shape), a.data());
  if (tracks({&a})) {
    auto ia = a.impl(), io = out.impl();
    emit({&a}, out, [ia, io]() {
      const auto& g = io->grad_ref();
      auto& da = ia->grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
    });
  }
  return out;
}

namespace {

// Iterates slices of a rank-1/2 tensor along `axis`, calling fn(base, stride, len).
template <typename F>
void for_each_slice(const Tensor& x, std::size_t axis, F fn) {
  if (x.rank() == 1) {
    if (axis != 0) throw std::invalid_argument("axis out of range for rank-1 tensor");
    fn(std::size_t{0}, std::size_t{1}, x.dim(0));
    return;
  }
  if (x.rank() != 2 || axis > 1) throw std::invalid_argument("axis out of range");
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (axis == 1) {
    for (std::size_t i = 0; i < r; ++i) fn(i * c, std::size_t{1}, c);
  } else {
    for (std::size_t j = 0; j < c; ++j) fn(j, c, r);
  }
}

}  // namespace

Tensor softmax(const Tensor& x, std::size_t axis) {
  Tensor out = Tensor::zeros(x.shape());
  for_each_slice(x, axis, [&](std::size_t base, std::size_t stride, std::size_t len) {
    double mx = x.at(base);
    for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, x.at(base + i * stride));
    double denom = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double e = std::exp(x.at(base + i * stride) - mx);
      out.data()[base + i * stride] = e;
      denom += e;
    }
    for (std::size_t i = 0; i < len; ++i) out.data()[base + i * stride] /= denom;
  });
  if (tracks({&x})) {
    auto ix = x.impl(), io = out.impl();
    auto shape = x.shape();
    emit({&x}, out, [ix, io, axis]() {
      const auto& g = io->grad_ref();
      auto& dx = ix->grad_ref();
      Tensor y(io);
      for_each_slice(y, axis, [&](std::size_t base, std::size_t stride, std::size_t len) {
        double dot = 0.0;
        for (std::size_t i = 0; i < len; ++i)
          dot += g[base + i * stride] * io->data[base + i * stride];
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t idx = base + i * stride;
          dx[idx] += io->data[idx] * (g[idx] - dot);
        }
      });
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = 1.0 / (1.0 + std::exp(-x.at(i)));
  if (tracks({&x})) {
    auto ix = x.impl(), io = out.impl();
    emit({&x}, out, [ix, io]() {
      const auto& g = io->grad_ref();
      auto& dx = ix->grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = io->data[i];
        dx[i] += g[i] * y * (1.0 - y);
      }
    });
  }
  return out;
}

Tensor tanh_op(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = std::tanh(x.at(i));
  if (tracks({&x})) {
    auto ix = x.impl(), io = out.impl();
    emit({&x}, out, [ix, io]() {
      const auto& g = io->grad_ref();
      auto& dx = ix->grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = io->data[i];
        dx[i] += g[i] * (1.0 - y * y);
      }
    });
  }
  return out;
}

Tensor power_norm(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double v = x.at(i);
    out.data()[i] = (v >= 0.0 ? 1.0 : -1.0) * std::sqrt(std::abs(v));
  }
  if (tracks({&x})) {
    auto ix = x.impl(), io = out.impl();
    emit({&x}, out, [ix, io]() {
      const auto& g = io->grad_ref();
      auto& dx = ix->grad_ref();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = std::abs(ix->data[i]);
        if (a > 0.0) dx[i] += g[i] * 0.5 / std::sqrt(a);
        // subgradient 0 at x = 0
      }
    });
  }
  return out;
}

Tensor l2_normalize(const Tensor& x, std::size_t axis) {
  constexpr double kEps = 1e-12;
  Tensor out = Tensor::zeros(x.shape());
  for_each_slice(x, axis, [&](std::size_t base, std::size_t stride, std::size_t len) {
    double sq = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double v = x.at(base + i * stride);
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    const double inv = norm > kEps ? 1.0 / norm : 1.0;  // degenerate slice passes through
    for (std::size_t i = 0; i < len; ++i)
      out.data()[base + i * stride] = x.at(base + i * stride) * inv;
  });
  if (tracks({&x})) {
    auto ix = x.impl(), io = out.impl();
    emit({&x}, out, [ix, io, axis]() {
      const auto& g = io->grad_ref();
      auto& dx = ix->grad_ref();
      Tensor xv(ix);
      for_each_slice(xv, axis, [&](std::size_t base, std::size_t stride, std::size_t len) {
        double sq = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
          const double v = ix->data[base + i * stride];
          sq += v * v;
        }
        const double norm = std::sqrt(sq);
        if (norm <= kEps) {
          for (std::size_t i = 0; i < len; ++i) dx[base + i * stride] += g[base + i * stride];
          return;
        }
        double dot = 0.0;
        for (std::size_t i = 0; i < len; ++i)
          dot += g[base + i * stride] * io->data[base + i * stride];
        for (std::size_t i = 0; i < len; ++i) {
          const std::size_t idx = base + i * stride;
          dx[idx] += (g[idx] - io->data[idx] * dot) / norm;
        }
      });
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) acc += x.at(i);
  Tensor out = Tensor::from_data({1}, {acc});
  if (tracks({&x})) {
    auto ix = x.impl(), io = out.impl();
    emit({&x}, out, [ix, io]() {
      const double g = io->grad_ref()[0];
      auto& dx = ix->grad_ref();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
    });
  }
  return out;
}

Tensor embedding_row(const Tensor& table, std::size_t id) {
  if (table.rank() != 2 || id >= table.dim(0))
    throw std::invalid_argument("embedding_row: id " + std::to_string(id) + " out of " +
                                shape_str(table.shape()));
  const std::size_t e = table.dim(1);
  Tensor out = Tensor::zeros({e});
  std::copy(table.data().begin() + id * e, table.data().begin() + (id + 1) * e,
            out.data().begin());
  if (tracks({&table})) {
    auto it = table.impl(), io = out.impl();
    emit({&table}, out, [it, io, id, e]() {
      const auto& g = io->grad_ref();
      auto& dt = it->grad_ref();
      for (std::size_t j = 0; j < e; ++j) dt[id * e + j] += g[j];
    });
  }
  return out;
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1)
    throw std::invalid_argument("backward: loss " + shape_str(loss.shape()) + " is not scalar");
  auto& g = loss.impl()->grad_ref();
  g[0] = 1.0;
  Tape::global().run_backward();
}

}  // namespace dialrank
