#ifndef CROSSMODAL_FUSION_HPP
#define CROSSMODAL_FUSION_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "crossmodal/errors.hpp"
#include "crossmodal/tensor.hpp"

namespace crossmodal {

enum class FusionVariant { Early, Late, CrossModalGated, CrossModalConcat };
enum class Backbone { Rnn, Transformer, NetVlad };

inline std::string to_string(FusionVariant v) {
  switch (v) {
    case FusionVariant::Early: return "E";
    case FusionVariant::Late: return "L";
    case FusionVariant::CrossModalGated: return "CM-G";
    case FusionVariant::CrossModalConcat: return "CM-C";
  }
  return "?";
}

inline std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::Rnn: return "rnn";
    case Backbone::Transformer: return "transformer";
    case Backbone::NetVlad: return "netvlad";
  }
  return "?";
}

// F(x) = relu(W x + b): the learned transform applied to one modality's
// intermediate signal before it is injected into the other modality.
// `present == false` means the model has no cross-modal path at all and the
// baseline computation is used bit-for-bit.
struct CrossModalTransform {
  Tensor w, b;
  bool present = false;

  Tensor apply(Tensor x) const { return relu(affine(x, w, b)); }
};

// ---- attention RNN ----

struct RnnTowerTensors {
  Tensor w_ih;   // [H x D]
  Tensor w_hh;   // [H x H]
  Tensor b;      // [H]
  Tensor score;  // [H] attention scoring vector
};

// Single-layer tanh (Elman) recurrence over the frame axis.
inline Tensor rnn_hidden_states(Tensor x, const RnnTowerTensors& p) {
  const Shape& s = x.shape();
  if (s.size() != 2) throw DimensionError("rnn_hidden_states: input must be [T x D]");
  const std::size_t t_len = s[0];
  if (t_len == 0) throw DimensionError("rnn_hidden_states: empty sequence");
  const std::size_t hidden = p.b.size();
  Tape& tape = *x.tape;
  Tensor h_prev = tape.constant({1, hidden}, std::vector<double>(hidden, 0.0));
  std::vector<Tensor> hs;
  hs.reserve(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    Tensor xt = slice_rows(x, t, t + 1);
    Tensor pre = add(affine(xt, p.w_ih, p.b), matmul(h_prev, transpose_last2(p.w_hh)));
    h_prev = tanh_act(pre);
    hs.push_back(h_prev);
  }
  return concat(hs, 0);  // [T x H]
}

// Soft self-attention pooling weights: softmax over frames of h . score.
inline Tensor attention_weights(Tensor h, Tensor score) {
  const Shape& s = h.shape();
  if (s.size() != 2 || s[0] == 0)
    throw DimensionError("attention_weights: need nonempty [T x H] hidden states");
  Tensor logits = reshape(matmul(h, reshape(score, {score.size(), 1})), {s[0]});
  return softmax_lastdim(logits);
}

// c_m = sum_t (alpha_m[t] + gate * F_other(alpha_other)[t]) * h_m[t].
// Returns the (video, audio) context vectors.
inline std::pair<Tensor, Tensor> cross_modal_rnn(Tensor x_v, Tensor x_a,
                                                 const RnnTowerTensors& pv,
                                                 const RnnTowerTensors& pa,
                                                 const CrossModalTransform& f_v,
                                                 const CrossModalTransform& f_a, double gate) {
  if (x_v.shape()[0] != x_a.shape()[0])
    throw DimensionError("cross_modal_rnn: frame counts differ: " + shape_str(x_v.shape()) +
                         " vs " + shape_str(x_a.shape()));
  const std::size_t t_len = x_v.shape()[0];
  Tensor h_v = rnn_hidden_states(x_v, pv);
  Tensor h_a = rnn_hidden_states(x_a, pa);
  Tensor alpha_v = attention_weights(h_v, pv.score);
  Tensor alpha_a = attention_weights(h_a, pa.score);
  Tensor w_v = alpha_v, w_a = alpha_a;
  if (f_a.present) w_v = add(alpha_v, scale(f_a.apply(alpha_a), gate));
  if (f_v.present) w_a = add(alpha_a, scale(f_v.apply(alpha_v), gate));
  Tensor c_v = reshape(matmul(reshape(w_v, {1, t_len}), h_v), {h_v.shape()[1]});
  Tensor c_a = reshape(matmul(reshape(w_a, {1, t_len}), h_a), {h_a.shape()[1]});
  return {c_v, c_a};
}

// ---- transformer ----

struct TransformerHeadTensors {
  Tensor w_q, w_k, w_v;  // each [D x d_k]
};

struct TransformerTowerTensors {
  std::vector<TransformerHeadTensors> heads;
  Tensor w_o;  // [k*d_k x Dm]
};

// Per-head elementwise-affine transform of the other modality's T x T logit
// matrix: relu(w * L + b) with scalar w, b.
struct HeadLogitTransform {
  Tensor w, b;  // shape [1]
  bool present = false;

  Tensor apply(Tensor logits) const { return relu(add(mul(logits, w), b)); }
};

namespace fusion_detail {

inline Tensor scaled_logits(Tensor x, const TransformerHeadTensors& h) {
  const std::size_t d_k = h.w_q.shape()[1];
  if (d_k == 0) throw DimensionError("transformer: head dimension is zero");
  Tensor q = matmul(x, h.w_q);
  Tensor k = matmul(x, h.w_k);
  // 1/sqrt(d_k) on both own and cross logits keeps the two terms on one scale.
  return scale(matmul(q, transpose_last2(k)), 1.0 / std::sqrt(static_cast<double>(d_k)));
}

}  // namespace fusion_detail

// One cross-modal multi-head self-attention layer for a single receiving
// modality: softmax(L_own + gate * F(L_cross)) . (X W^V) per head, heads
// concatenated and projected by W^O.
inline Tensor cross_modal_attention(Tensor x_own, Tensor x_other,
                                    const TransformerTowerTensors& own,
                                    const TransformerTowerTensors& other,
                                    const std::vector<HeadLogitTransform>& f, double gate) {
  std::vector<Tensor> head_outs;
  head_outs.reserve(own.heads.size());
  for (std::size_t i = 0; i < own.heads.size(); ++i) {
    Tensor logits = fusion_detail::scaled_logits(x_own, own.heads[i]);
    if (!f.empty() && f[i].present) {
      Tensor cross = fusion_detail::scaled_logits(x_other, other.heads[i]);
      logits = add(logits, scale(f[i].apply(cross), gate));
    }
    Tensor attn = softmax_lastdim(logits);
    head_outs.push_back(matmul(attn, matmul(x_own, own.heads[i].w_v)));
  }
  Tensor cat = head_outs.size() == 1 ? head_outs[0] : concat(head_outs, 1);
  return matmul(cat, own.w_o);  // [T x Dm]
}

// Both modalities of the cross-modal transformer layer. f_v transforms video
// logits for the audio channel; f_a the reverse.
inline std::pair<Tensor, Tensor> cross_modal_transformer_layer(
    Tensor x_v, Tensor x_a, const TransformerTowerTensors& pv, const TransformerTowerTensors& pa,
    const std::vector<HeadLogitTransform>& f_v, const std::vector<HeadLogitTransform>& f_a,
    double gate) {
  if (x_v.shape()[0] != x_a.shape()[0])
    throw DimensionError("cross_modal_transformer_layer: frame counts differ");
  Tensor y_v = cross_modal_attention(x_v, x_a, pv, pa, f_a, gate);
  Tensor y_a = cross_modal_attention(x_a, x_v, pa, pv, f_v, gate);
  return {y_v, y_a};
}

// ---- NetVLAD ----

struct NetVladTensors {
  Tensor centers;  // [K x D]
  Tensor proj_w;   // [K x D]
  Tensor proj_b;   // [K]
};

// Per-frame soft assignment over K clusters; each row on the simplex.
inline Tensor netvlad_assignments(Tensor x, const NetVladTensors& p) {
  if (x.shape().size() != 2 || x.shape()[0] == 0)
    throw DimensionError("netvlad_assignments: need nonempty [T x D] input");
  if (p.proj_b.size() == 0) throw ConfigError("netvlad_assignments: zero clusters");
  return softmax_lastdim(affine(x, p.proj_w, p.proj_b));
}

// VLAD aggregation with cross-modal assignment injection:
//   V[j] = sum_t (alpha[t,j] + gate * F_other(alpha_other[t])[j]) (x[t] - c[j])
// computed as w^T x - diag(colsum(w)) c. Flattened and L2-normalized.
inline Tensor netvlad_descriptor(Tensor x, const NetVladTensors& p, Tensor assign,
                                 Tensor assign_other, const CrossModalTransform& f_other,
                                 double gate) {
  const std::size_t clusters = p.proj_b.size();
  Tensor w = assign;
  if (f_other.present) {
    Tensor injected = f_other.apply(assign_other);  // [T x K_own]
    if (injected.shape()[1] != clusters)
      throw DimensionError("netvlad: transform output width " +
                           std::to_string(injected.shape()[1]) + " != cluster count " +
                           std::to_string(clusters));
    w = add(assign, scale(injected, gate));
  }
  Tensor v = sub(matmul(transpose_last2(w), x), scale_rows(p.centers, reduce_sum(w, 0)));
  return l2_normalize(reshape(v, {v.size()}));
}

inline std::pair<Tensor, Tensor> cross_modal_netvlad(Tensor x_v, Tensor x_a,
                                                     const NetVladTensors& pv,
                                                     const NetVladTensors& pa,
                                                     const CrossModalTransform& f_v,
                                                     const CrossModalTransform& f_a, double gate) {
  if (x_v.shape()[0] != x_a.shape()[0])
    throw DimensionError("cross_modal_netvlad: frame counts differ");
  Tensor a_v = netvlad_assignments(x_v, pv);
  Tensor a_a = netvlad_assignments(x_a, pa);
  Tensor v_v = netvlad_descriptor(x_v, pv, a_v, a_a, f_a, gate);
  Tensor v_a = netvlad_descriptor(x_a, pa, a_a, a_v, f_v, gate);
  return {v_v, v_a};
}

// ---- fusion heads ----

// Per-frame concatenation of the two modalities.
inline Tensor early_fusion(Tensor x_v, Tensor x_a) {
  if (x_v.shape()[0] != x_a.shape()[0])
    throw DimensionError("early_fusion: frame counts differ: " + shape_str(x_v.shape()) +
                         " vs " + shape_str(x_a.shape()));
  return concat({x_v, x_a}, 1);
}

struct HeadTensors {
  Tensor w1, b1;  // hidden layer
  Tensor w2, b2;  // per-label logits
};

inline Tensor classifier_head(Tensor embedding, const HeadTensors& p) {
  return affine(relu(affine(embedding, p.w1, p.b1)), p.w2, p.b2);
}

// concat -> affine -> relu -> affine -> per-label logits. Sigmoid is applied
// at loss/inference time.
inline Tensor late_fusion_head(Tensor e_v, Tensor e_a, const HeadTensors& p) {
  return classifier_head(concat({e_v, e_a}, 0), p);
}

}  // namespace crossmodal

#endif
