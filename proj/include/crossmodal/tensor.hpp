#ifndef CROSSMODAL_TENSOR_HPP
#define CROSSMODAL_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "crossmodal/errors.hpp"

namespace crossmodal {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

class Tape;

// Lightweight handle into a Tape. Copies alias the same node.
struct Tensor {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Shape& shape() const;
  const std::vector<double>& value() const;
  const std::vector<double>& grad() const;
  std::size_t size() const { return numel(shape()); }
  double scalar() const;
};

// Records the forward computation; replays it in reverse for gradients.
// Node order is a topological order by construction: an op's inputs are
// always created before the op itself.
class Tape {
 public:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::function<void()> backprop;  // empty for leaves/constants
  };

  Tensor leaf(Shape shape, std::vector<double> data, bool requires_grad) {
    if (numel(shape) != data.size())
      throw DimensionError("leaf: shape " + shape_str(shape) + " does not match data length " +
                           std::to_string(data.size()));
    nodes_.push_back(Node{std::move(shape), std::move(data), {}, requires_grad, nullptr});
    return Tensor{this, nodes_.size() - 1};
  }

  Tensor constant(Shape shape, std::vector<double> data) {
    return leaf(std::move(shape), std::move(data), false);
  }

  Tensor scalar_const(double v) { return constant({1}, {v}); }

  Tensor make_node(Shape shape, std::vector<double> value, bool requires_grad,
                   std::function<void()> backprop) {
    nodes_.push_back(
        Node{std::move(shape), std::move(value), {}, requires_grad, std::move(backprop)});
    return Tensor{this, nodes_.size() - 1};
  }

  Node& node(std::size_t id) { return nodes_[id]; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar loss. Gradients accumulate additively, so a
  // tensor feeding several consumers receives the sum of their contributions.
  void backward(Tensor loss) {
    if (loss.tape != this) throw ContractError("backward: loss lives on a different tape");
    Node& ln = nodes_[loss.id];
    if (numel(ln.shape) != 1) throw ContractError("backward: loss must be scalar, got shape " +
                                                  shape_str(ln.shape));
    for (auto& n : nodes_) {
      n.grad.assign(n.value.size(), 0.0);
    }
    ln.grad[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backprop && n.requires_grad) n.backprop();
    }
  }

 private:
  std::vector<Node> nodes_;
};

inline const Shape& Tensor::shape() const { return tape->node(id).shape; }
inline const std::vector<double>& Tensor::value() const { return tape->node(id).value; }
inline const std::vector<double>& Tensor::grad() const { return tape->node(id).grad; }
inline double Tensor::scalar() const {
  if (size() != 1) throw ContractError("scalar(): tensor has shape " + shape_str(shape()));
  return value()[0];
}

namespace detail {

inline void require_same_tape(Tensor a, Tensor b, const char* op) {
  if (a.tape != b.tape) throw ContractError(std::string(op) + ": tensors on different tapes");
}

// Broadcasting is limited to leading batch dimensions: either the shapes are
// equal, one operand is a single element, or the smaller shape is a trailing
// suffix of the larger. Row-major layout makes the suffix case a simple
// modulo on the flat index.
inline bool suffix_of(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  for (std::size_t i = 0; i < small.size(); ++i)
    if (small[small.size() - 1 - i] != big[big.size() - 1 - i]) return false;
  return true;
}

inline void check_broadcast(const Shape& a, const Shape& b, const char* op) {
  if (a == b || numel(a) == 1 || numel(b) == 1) return;
  if (suffix_of(a, b) || suffix_of(b, a)) return;
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                       shape_str(b));
}

}  // namespace detail

// ---- elementwise binary ops with leading-dim broadcasting ----

template <class Fwd, class Bwd>
Tensor binary_elementwise(Tensor a, Tensor b, const char* name, Fwd fwd, Bwd bwd) {
  detail::require_same_tape(a, b, name);
  Tape& tape = *a.tape;
  const auto& an = tape.node(a.id);
  const auto& bn = tape.node(b.id);
  detail::check_broadcast(an.shape, bn.shape, name);
  const Shape& out_shape = an.value.size() >= bn.value.size() ? an.shape : bn.shape;
  const std::size_t n = numel(out_shape);
  const std::size_t na = an.value.size(), nb = bn.value.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(an.value[i % na], bn.value[i % nb]);
  bool rg = an.requires_grad || bn.requires_grad;
  Tensor res{&tape, 0};
  res = tape.make_node(out_shape, std::move(out), rg, nullptr);
  std::size_t rid = res.id, aid = a.id, bid = b.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, aid, bid, n, na, nb, bwd]() {
    auto& rn = tp->node(rid);
    auto& an2 = tp->node(aid);
    auto& bn2 = tp->node(bid);
    for (std::size_t i = 0; i < n; ++i) {
      double da, db;
      bwd(an2.value[i % na], bn2.value[i % nb], rn.value[i], rn.grad[i], da, db);
      if (an2.requires_grad) an2.grad[i % na] += da;
      if (bn2.requires_grad) bn2.grad[i % nb] += db;
    }
  };
  return res;
}

inline Tensor add(Tensor a, Tensor b) {
  return binary_elementwise(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double, double g, double& da, double& db) {
        da = g;
        db = g;
      });
}

inline Tensor sub(Tensor a, Tensor b) {
  return binary_elementwise(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double, double g, double& da, double& db) {
        da = g;
        db = -g;
      });
}

inline Tensor mul(Tensor a, Tensor b) {
  return binary_elementwise(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y, double, double g, double& da, double& db) {
        da = g * y;
        db = g * x;
      });
}

inline Tensor div(Tensor a, Tensor b) {
  return binary_elementwise(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double x, double y, double, double g, double& da, double& db) {
        da = g / y;
        db = -g * x / (y * y);
      });
}

// ---- elementwise unary ops ----

template <class Fwd, class Bwd>
Tensor unary_elementwise(Tensor x, Fwd fwd, Bwd bwd) {
  Tape& tape = *x.tape;
  const auto& xn = tape.node(x.id);
  const std::size_t n = xn.value.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(xn.value[i]);
  Tensor res = tape.make_node(xn.shape, std::move(out), xn.requires_grad, nullptr);
  std::size_t rid = res.id, xid = x.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, xid, n, bwd]() {
    auto& rn = tp->node(rid);
    auto& xn2 = tp->node(xid);
    if (!xn2.requires_grad) return;
    for (std::size_t i = 0; i < n; ++i) xn2.grad[i] += rn.grad[i] * bwd(xn2.value[i], rn.value[i]);
  };
  return res;
}

inline Tensor relu(Tensor x) {
  return unary_elementwise(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(Tensor x) {
  return unary_elementwise(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh_act(Tensor x) {
  return unary_elementwise(x, [](double v) { return std::tanh(v); },
                           [](double, double y) { return 1.0 - y * y; });
}

inline Tensor sqrt_op(Tensor x) {
  return unary_elementwise(x, [](double v) { return std::sqrt(v); },
                           [](double, double y) { return 0.5 / y; });
}

inline Tensor log_op(Tensor x) {
  return unary_elementwise(x, [](double v) { return std::log(v); },
                           [](double v, double) { return 1.0 / v; });
}

// Pass-through gradient inside [lo, hi], zero outside.
inline Tensor clamp(Tensor x, double lo, double hi) {
  return unary_elementwise(
      x, [lo, hi](double v) { return std::min(hi, std::max(lo, v)); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

inline Tensor scale(Tensor x, double c) {
  return unary_elementwise(x, [c](double v) { return c * v; },
                           [c](double, double) { return c; });
}

// ---- structural ops ----

inline Tensor reshape(Tensor x, Shape shape) {
  Tape& tape = *x.tape;
  const auto& xn = tape.node(x.id);
  if (numel(shape) != xn.value.size())
    throw DimensionError("reshape: cannot view " + shape_str(xn.shape) + " as " +
                         shape_str(shape));
  Tensor res = tape.make_node(std::move(shape), xn.value, xn.requires_grad, nullptr);
  std::size_t rid = res.id, xid = x.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, xid]() {
    auto& rn = tp->node(rid);
    auto& xn2 = tp->node(xid);
    if (!xn2.requires_grad) return;
    for (std::size_t i = 0; i < rn.grad.size(); ++i) xn2.grad[i] += rn.grad[i];
  };
  return res;
}

inline Tensor matmul(Tensor a, Tensor b) {
  detail::require_same_tape(a, b, "matmul");
  Tape& tape = *a.tape;
  const auto& an = tape.node(a.id);
  const auto& bn = tape.node(b.id);
  if (an.shape.size() != 2 || bn.shape.size() != 2 || an.shape[1] != bn.shape[0])
    throw DimensionError("matmul: incompatible shapes " + shape_str(an.shape) + " and " +
                         shape_str(bn.shape));
  const std::size_t m = an.shape[0], k = an.shape[1], n = bn.shape[1];
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double av = an.value[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += av * bn.value[p * n + j];
    }
  bool rg = an.requires_grad || bn.requires_grad;
  Tensor res = tape.make_node({m, n}, std::move(out), rg, nullptr);
  std::size_t rid = res.id, aid = a.id, bid = b.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, aid, bid, m, k, n]() {
    auto& rn = tp->node(rid);
    auto& an2 = tp->node(aid);
    auto& bn2 = tp->node(bid);
    if (an2.requires_grad) {  // dA = dC . B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double g = rn.grad[i * n + j];
          for (std::size_t p = 0; p < k; ++p) an2.grad[i * k + p] += g * bn2.value[p * n + j];
        }
    }
    if (bn2.requires_grad) {  // dB = A^T . dC
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = an2.value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) bn2.grad[p * n + j] += av * rn.grad[i * n + j];
        }
    }
  };
  return res;
}

// y = x W^T + b with W of shape [out x in]; x is [in] or [T x in].
inline Tensor affine(Tensor x, Tensor w, Tensor b) {
  detail::require_same_tape(x, w, "affine");
  detail::require_same_tape(x, b, "affine");
  Tape& tape = *x.tape;
  const auto& xn = tape.node(x.id);
  const auto& wn = tape.node(w.id);
  const auto& bnn = tape.node(b.id);
  if (wn.shape.size() != 2)
    throw DimensionError("affine: weight must be 2-D, got " + shape_str(wn.shape));
  const std::size_t out_dim = wn.shape[0], in_dim = wn.shape[1];
  if (bnn.value.size() != out_dim)
    throw DimensionError("affine: bias " + shape_str(bnn.shape) + " does not match weight " +
                         shape_str(wn.shape));
  std::size_t rows;
  Shape out_shape;
  if (xn.shape.size() == 1) {
    if (xn.shape[0] != in_dim)
      throw DimensionError("affine: input " + shape_str(xn.shape) + " vs weight " +
                           shape_str(wn.shape));
    rows = 1;
    out_shape = {out_dim};
  } else if (xn.shape.size() == 2) {
    if (xn.shape[1] != in_dim)
      throw DimensionError("affine: input " + shape_str(xn.shape) + " vs weight " +
                           shape_str(wn.shape));
    rows = xn.shape[0];
    out_shape = {rows, out_dim};
  } else {
    throw DimensionError("affine: input must be 1-D or 2-D, got " + shape_str(xn.shape));
  }
  std::vector<double> out(rows * out_dim);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < out_dim; ++o) {
      double acc = bnn.value[o];
      const double* xa = &xn.value[r * in_dim];
      const double* wa = &wn.value[o * in_dim];
      for (std::size_t i = 0; i < in_dim; ++i) acc += xa[i] * wa[i];
      out[r * out_dim + o] = acc;
    }
  bool rg = xn.requires_grad || wn.requires_grad || bnn.requires_grad;
  Tensor res = tape.make_node(std::move(out_shape), std::move(out), rg, nullptr);
  std::size_t rid = res.id, xid = x.id, wid = w.id, bid = b.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, xid, wid, bid, rows, in_dim, out_dim]() {
    auto& rn = tp->node(rid);
    auto& xn2 = tp->node(xid);
    auto& wn2 = tp->node(wid);
    auto& bn2 = tp->node(bid);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double g = rn.grad[r * out_dim + o];
        if (g == 0.0) continue;
        if (bn2.requires_grad) bn2.grad[o] += g;
        const double* xa = &xn2.value[r * in_dim];
        const double* wa = &wn2.value[o * in_dim];
        if (wn2.requires_grad)
          for (std::size_t i = 0; i < in_dim; ++i) wn2.grad[o * in_dim + i] += g * xa[i];
        if (xn2.requires_grad)
          for (std::size_t i = 0; i < in_dim; ++i) xn2.grad[r * in_dim + i] += g * wa[i];
      }
  };
  return res;
}

// Numerically stabilized softmax over the last dimension.
inline Tensor softmax_lastdim(Tensor x) {
  Tape& tape = *x.tape;
  const auto& xn = tape.node(x.id);
  if (xn.shape.empty() || xn.shape.back() == 0 || xn.value.empty())
    throw DimensionError("softmax_lastdim: empty tensor");
  const std::size_t d = xn.shape.back();
  const std::size_t rows = xn.value.size() / d;
  std::vector<double> out(xn.value.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &xn.value[r * d];
    double mx = in[0];
    for (std::size_t i = 1; i < d; ++i) mx = std::max(mx, in[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      out[r * d + i] = std::exp(in[i] - mx);
      sum += out[r * d + i];
    }
    for (std::size_t i = 0; i < d; ++i) out[r * d + i] /= sum;
  }
  Tensor res = tape.make_node(xn.shape, std::move(out), xn.requires_grad, nullptr);
  std::size_t rid = res.id, xid = x.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, xid, rows, d]() {
    auto& rn = tp->node(rid);
    auto& xn2 = tp->node(xid);
    if (!xn2.requires_grad) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = &rn.value[r * d];
      const double* gy = &rn.grad[r * d];
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += y[i] * gy[i];
      for (std::size_t i = 0; i < d; ++i) xn2.grad[r * d + i] += y[i] * (gy[i] - dot);
    }
  };
  return res;
}

inline Tensor concat(const std::vector<Tensor>& tensors, std::size_t axis) {
  if (tensors.empty()) throw DimensionError("concat: no inputs");
  Tape& tape = *tensors[0].tape;
  const Shape& s0 = tape.node(tensors[0].id).shape;
  if (axis >= s0.size())
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(s0));
  Shape out_shape = s0;
  out_shape[axis] = 0;
  bool rg = false;
  for (auto t : tensors) {
    detail::require_same_tape(tensors[0], t, "concat");
    const Shape& s = tape.node(t.id).shape;
    if (s.size() != s0.size())
      throw DimensionError("concat: rank mismatch " + shape_str(s0) + " vs " + shape_str(s));
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != s0[i])
        throw DimensionError("concat: shapes differ off-axis: " + shape_str(s0) + " vs " +
                             shape_str(s));
    out_shape[axis] += s[axis];
    rg = rg || tape.node(t.id).requires_grad;
  }
  // outer = product of dims before axis, inner = product after.
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s0[i];
  for (std::size_t i = axis + 1; i < s0.size(); ++i) inner *= s0[i];
  std::vector<double> out(numel(out_shape));
  const std::size_t out_axis = out_shape[axis];
  std::size_t offset = 0;
  std::vector<std::size_t> ids, axes;
  for (auto t : tensors) {
    const auto& n = tape.node(t.id);
    const std::size_t a = n.shape[axis];
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(&n.value[o * a * inner], a * inner,
                  &out[(o * out_axis + offset) * inner]);
    ids.push_back(t.id);
    axes.push_back(a);
    offset += a;
  }
  Tensor res = tape.make_node(std::move(out_shape), std::move(out), rg, nullptr);
  std::size_t rid = res.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, ids, axes, outer, inner, out_axis]() {
    auto& rn = tp->node(rid);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto& pn = tp->node(ids[k]);
      const std::size_t a = axes[k];
      if (pn.requires_grad)
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < a * inner; ++i)
            pn.grad[o * a * inner + i] += rn.grad[(o * out_axis + off) * inner + i];
      off += a;
    }
  };
  return res;
}

inline Tensor reduce_sum(Tensor x, std::size_t axis) {
  Tape& tape = *x.tape;
  const auto& xn = tape.node(x.id);
  if (axis >= xn.shape.size())
    throw DimensionError("reduce_sum: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(xn.shape));
  Shape out_shape;
  for (std::size_t i = 0; i < xn.shape.size(); ++i)
    if (i != axis) out_shape.push_back(xn.shape[i]);
  if (out_shape.empty()) out_shape = {1};
  std::size_t outer = 1, inner = 1;
  const std::size_t a = xn.shape[axis];
  for (std::size_t i = 0; i < axis; ++i) outer *= xn.shape[i];
  for (std::size_t i = axis + 1; i < xn.shape.size(); ++i) inner *= xn.shape[i];
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < a; ++j)
      for (std::size_t i = 0; i < inner; ++i)
        out[o * inner + i] += xn.value[(o * a + j) * inner + i];
  Tensor res = tape.make_node(std::move(out_shape), std::move(out), xn.requires_grad, nullptr);
  std::size_t rid = res.id, xid = x.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, xid, outer, inner, a]() {
    auto& rn = tp->node(rid);
    auto& xn2 = tp->node(xid);
    if (!xn2.requires_grad) return;
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t j = 0; j < a; ++j)
        for (std::size_t i = 0; i < inner; ++i)
          xn2.grad[(o * a + j) * inner + i] += rn.grad[o * inner + i];
  };
  return res;
}

inline Tensor reduce_mean(Tensor x, std::size_t axis) {
  const std::size_t a = x.shape().size() > axis ? x.shape()[axis] : 0;
  Tensor s = reduce_sum(x, axis);
  return scale(s, 1.0 / static_cast<double>(a));
}

inline Tensor sum_all(Tensor x) {
  Tensor flat = reshape(x, {x.size()});
  return reduce_sum(flat, 0);
}

inline Tensor mean_all(Tensor x) { return scale(sum_all(x), 1.0 / static_cast<double>(x.size())); }

inline Tensor transpose_last2(Tensor x) {
  Tape& tape = *x.tape;
  const auto& xn = tape.node(x.id);
  if (xn.shape.size() < 2)
    throw DimensionError("transpose_last2: need >= 2 dims, got " + shape_str(xn.shape));
  Shape out_shape = xn.shape;
  std::swap(out_shape[out_shape.size() - 1], out_shape[out_shape.size() - 2]);
  const std::size_t r = xn.shape[xn.shape.size() - 2], c = xn.shape.back();
  const std::size_t batch = xn.value.size() / (r * c);
  std::vector<double> out(xn.value.size());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        out[b * r * c + j * r + i] = xn.value[b * r * c + i * c + j];
  Tensor res = tape.make_node(std::move(out_shape), std::move(out), xn.requires_grad, nullptr);
  std::size_t rid = res.id, xid = x.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, xid, batch, r, c]() {
    auto& rn = tp->node(rid);
    auto& xn2 = tp->node(xid);
    if (!xn2.requires_grad) return;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
          xn2.grad[b * r * c + i * c + j] += rn.grad[b * r * c + j * r + i];
  };
  return res;
}

inline Tensor slice_rows(Tensor x, std::size_t r0, std::size_t r1) {
  Tape& tape = *x.tape;
  const auto& xn = tape.node(x.id);
  if (xn.shape.size() != 2 || r1 > xn.shape[0] || r0 >= r1)
    throw DimensionError("slice_rows: bad range [" + std::to_string(r0) + "," +
                         std::to_string(r1) + ") for " + shape_str(xn.shape));
  const std::size_t c = xn.shape[1];
  std::vector<double> out(xn.value.begin() + r0 * c, xn.value.begin() + r1 * c);
  Tensor res = tape.make_node({r1 - r0, c}, std::move(out), xn.requires_grad, nullptr);
  std::size_t rid = res.id, xid = x.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, xid, r0, c]() {
    auto& rn = tp->node(rid);
    auto& xn2 = tp->node(xid);
    if (!xn2.requires_grad) return;
    for (std::size_t i = 0; i < rn.grad.size(); ++i) xn2.grad[r0 * c + i] += rn.grad[i];
  };
  return res;
}

// y[r, :] = s[r] * x[r, :]
inline Tensor scale_rows(Tensor x, Tensor s) {
  detail::require_same_tape(x, s, "scale_rows");
  Tape& tape = *x.tape;
  const auto& xn = tape.node(x.id);
  const auto& sn = tape.node(s.id);
  if (xn.shape.size() != 2 || sn.value.size() != xn.shape[0])
    throw DimensionError("scale_rows: x " + shape_str(xn.shape) + " vs s " + shape_str(sn.shape));
  const std::size_t r = xn.shape[0], c = xn.shape[1];
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = sn.value[i] * xn.value[i * c + j];
  bool rg = xn.requires_grad || sn.requires_grad;
  Tensor res = tape.make_node({r, c}, std::move(out), rg, nullptr);
  std::size_t rid = res.id, xid = x.id, sid = s.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, xid, sid, r, c]() {
    auto& rn = tp->node(rid);
    auto& xn2 = tp->node(xid);
    auto& sn2 = tp->node(sid);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double g = rn.grad[i * c + j];
        if (xn2.requires_grad) xn2.grad[i * c + j] += g * sn2.value[i];
        if (sn2.requires_grad) sn2.grad[i] += g * xn2.value[i * c + j];
      }
  };
  return res;
}

// Mean over the first true_len rows; gradient flows only into those rows.
inline Tensor mean_rows_masked(Tensor x, std::size_t true_len) {
  Tape& tape = *x.tape;
  const auto& xn = tape.node(x.id);
  if (xn.shape.size() != 2) throw DimensionError("mean_rows_masked: need 2-D input");
  if (true_len == 0) throw DataError("mean_rows_masked: empty sequence (true length 0)");
  if (true_len > xn.shape[0])
    throw DimensionError("mean_rows_masked: true length exceeds row count");
  const std::size_t c = xn.shape[1];
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < true_len; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += xn.value[i * c + j];
  for (std::size_t j = 0; j < c; ++j) out[j] /= static_cast<double>(true_len);
  Tensor res = tape.make_node({c}, std::move(out), xn.requires_grad, nullptr);
  std::size_t rid = res.id, xid = x.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, xid, true_len, c]() {
    auto& rn = tp->node(rid);
    auto& xn2 = tp->node(xid);
    if (!xn2.requires_grad) return;
    const double inv = 1.0 / static_cast<double>(true_len);
    for (std::size_t i = 0; i < true_len; ++i)
      for (std::size_t j = 0; j < c; ++j) xn2.grad[i * c + j] += rn.grad[j] * inv;
  };
  return res;
}

// Numerically stable per-element sigmoid cross-entropy against fixed targets,
// averaged over elements. grad(z) = sigmoid(z) - y.
inline Tensor bce_with_logits_mean(Tensor logits, const std::vector<double>& targets) {
  Tape& tape = *logits.tape;
  const auto& ln = tape.node(logits.id);
  if (ln.value.size() != targets.size())
    throw DimensionError("bce_with_logits_mean: " + std::to_string(ln.value.size()) +
                         " logits vs " + std::to_string(targets.size()) + " targets");
  const std::size_t n = ln.value.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = ln.value[i], y = targets[i];
    loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  loss /= static_cast<double>(n);
  Tensor res = tape.make_node({1}, {loss}, ln.requires_grad, nullptr);
  std::size_t rid = res.id, lid = logits.id;
  Tape* tp = &tape;
  tape.node(rid).backprop = [tp, rid, lid, targets, n]() {
    auto& rn = tp->node(rid);
    auto& ln2 = tp->node(lid);
    if (!ln2.requires_grad) return;
    const double g = rn.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double z = ln2.value[i];
      const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      ln2.grad[i] += g * (s - targets[i]);
    }
  };
  return res;
}

inline Tensor l2_normalize(Tensor x) {
  Tape& tape = *x.tape;
  Tensor sq = sum_all(mul(x, x));
  Tensor nrm = sqrt_op(add(sq, tape.scalar_const(1e-12)));
  return div(x, nrm);
}

// ---- parameters and gradient checking ----

struct Parameter {
  Shape shape;
  std::vector<double> value;
};

using ParamMap = std::map<std::string, Parameter>;
using GradMap = std::map<std::string, std::vector<double>>;

// Binds named parameters onto a tape as differentiable leaves and remembers
// the binding so gradients can be read back after backward().
class ParamBinder {
 public:
  ParamBinder(Tape& tape, const ParamMap& params, bool requires_grad = true)
      : tape_(tape), params_(params), requires_grad_(requires_grad) {}

  Tensor operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    auto pit = params_.find(name);
    if (pit == params_.end()) throw ContractError("unknown parameter: " + name);
    Tensor t = tape_.leaf(pit->second.shape, pit->second.value, requires_grad_);
    bound_.emplace(name, t);
    return t;
  }

  GradMap collect_grads() const {
    GradMap g;
    for (const auto& [name, t] : bound_) g[name] = t.grad();
    return g;
  }

  const std::map<std::string, Tensor>& bound() const { return bound_; }

 private:
  Tape& tape_;
  const ParamMap& params_;
  bool requires_grad_;
  std::map<std::string, Tensor> bound_;
};

// Central finite-difference verification of reverse-mode gradients.
// f builds a scalar loss on the given tape from leaves bound to `params`.
// Returns max over parameter components of
//   |analytic - central_difference| / max(1, |central_difference|).
inline double gradient_check(
    const std::function<Tensor(Tape&, ParamBinder&)>& f, ParamMap params, double epsilon = 1e-4) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3))
    throw ContractError("gradient_check: epsilon must lie in [1e-6, 1e-3]");
  auto eval = [&](const ParamMap& p) {
    Tape tape;
    ParamBinder bind(tape, p, false);
    Tensor loss = f(tape, bind);
    double v = loss.scalar();
    if (!std::isfinite(v)) throw NumericError("gradient_check: non-finite objective");
    return v;
  };
  GradMap analytic;
  {
    Tape tape;
    ParamBinder bind(tape, params, true);
    Tensor loss = f(tape, bind);
    if (!std::isfinite(loss.scalar()))
      throw NumericError("gradient_check: non-finite objective");
    tape.backward(loss);
    analytic = bind.collect_grads();
  }
  double max_err = 0.0;
  for (auto& [name, p] : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + epsilon;
      const double fp = eval(params);
      p.value[i] = orig - epsilon;
      const double fm = eval(params);
      p.value[i] = orig;
      const double fd = (fp - fm) / (2.0 * epsilon);
      const double an = analytic.count(name) ? analytic[name][i] : 0.0;
      const double err = std::abs(an - fd) / std::max(1.0, std::abs(fd));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace crossmodal

#endif
