#ifndef CROSSMODAL_CORRELATION_HPP
#define CROSSMODAL_CORRELATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "crossmodal/errors.hpp"
#include "crossmodal/example.hpp"
#include "crossmodal/optim.hpp"
#include "crossmodal/taxonomy.hpp"
#include "crossmodal/tensor.hpp"

namespace crossmodal {

// Mean over non-padded frames of a [T x D] frame matrix.
inline std::vector<double> pool_modality(const std::vector<double>& frames, std::size_t t_total,
                                         std::size_t dim, std::size_t true_length) {
  if (frames.size() != t_total * dim)
    throw DimensionError("pool_modality: frame buffer size mismatch");
  if (true_length == 0) throw DataError("pool_modality: empty sequence (true length 0)");
  if (true_length > t_total) throw DimensionError("pool_modality: true length exceeds frames");
  std::vector<double> out(dim, 0.0);
  for (std::size_t t = 0; t < true_length; ++t)
    for (std::size_t d = 0; d < dim; ++d) out[d] += frames[t * dim + d];
  for (auto& v : out) v /= static_cast<double>(true_length);
  return out;
}

// One (pooled video, pooled audio, binary label) training pair.
struct CorrelationExample {
  std::vector<double> f_v, f_a;
  int y = 1;  // 1 = same-video pair
};

// loss = -[y log y' + w_neg (1-y) log(1-y')], y' clamped away from {0,1}.
inline double weighted_correlation_loss(int y, double y_prime, double w_neg) {
  if (y != 0 && y != 1) throw ContractError("weighted_correlation_loss: y must be 0 or 1");
  if (w_neg <= 0.0) throw ConfigError("weighted_correlation_loss: w_neg must be positive");
  const double p = std::min(1.0 - 1e-12, std::max(1e-12, y_prime));
  return -(y * std::log(p) + w_neg * (1 - y) * std::log(1.0 - p));
}

inline int correlation_gate(double y_prime, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("correlation_gate: threshold must lie in (0,1)");
  return y_prime >= threshold ? 1 : 0;  // tie activates
}

struct CorrelationTowerConfig {
  std::size_t dim_v = 0;
  std::size_t dim_a = 0;
  std::size_t hidden1 = 16;
  std::size_t hidden2 = 16;
};

// Binary audio/video correlation predictor: two affine+ReLU hidden layers
// over concat(f_v, f_a), then affine + sigmoid. Trained separately, then
// frozen; the frozen tower gates or feeds the cross-modal layers.
class CorrelationTower {
 public:
  CorrelationTower() = default;

  CorrelationTower(const CorrelationTowerConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    const std::size_t in = cfg.dim_v + cfg.dim_a;
    params_["corr.w1"] = init_uniform_fanin({cfg.hidden1, in}, in, seed, "corr.w1");
    params_["corr.b1"] = init_uniform_fanin({cfg.hidden1}, in, seed, "corr.b1");
    params_["corr.w2"] = init_uniform_fanin({cfg.hidden2, cfg.hidden1}, cfg.hidden1, seed, "corr.w2");
    params_["corr.b2"] = init_uniform_fanin({cfg.hidden2}, cfg.hidden1, seed, "corr.b2");
    params_["corr.w3"] = init_uniform_fanin({1, cfg.hidden2}, cfg.hidden2, seed, "corr.w3");
    params_["corr.b3"] = init_uniform_fanin({1}, cfg.hidden2, seed, "corr.b3");
  }

  const CorrelationTowerConfig& config() const { return cfg_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  ParamMap& params() {
    if (frozen_) throw ContractError("correlation tower is frozen");
    return params_;
  }
  const ParamMap& params() const { return params_; }
  long call_count() const { return call_count_; }
  void reset_call_count() { call_count_ = 0; }

  // Width of the CM-C feature: y' plus the last hidden layer.
  std::size_t feature_dim() const { return 1 + cfg_.hidden2; }

  // y' in (0,1). Plain evaluation, no tape.
  double forward(const std::vector<double>& f_v, const std::vector<double>& f_a) const {
    std::vector<double> h2;
    return eval(f_v, f_a, &h2);
  }

  // Frozen tower's scalar y' followed by its last hidden activations; the
  // CM-C variant concatenates this onto each modality's per-frame input.
  std::vector<double> feature(const std::vector<double>& f_v,
                              const std::vector<double>& f_a) const {
    if (!frozen_) throw ContractError("correlation_feature: tower must be frozen");
    std::vector<double> h2;
    const double y_prime = eval(f_v, f_a, &h2);
    std::vector<double> out;
    out.reserve(1 + h2.size());
    out.push_back(y_prime);
    out.insert(out.end(), h2.begin(), h2.end());
    return out;
  }

  // Differentiable forward for training. Returns y' as a scalar tensor.
  Tensor forward_tape(Tape& tape, ParamBinder& bind, const std::vector<double>& f_v,
                      const std::vector<double>& f_a) const {
    std::vector<double> in = f_v;
    in.insert(in.end(), f_a.begin(), f_a.end());
    Tensor x = tape.constant({in.size()}, in);
    Tensor h1 = relu(affine(x, bind("corr.w1"), bind("corr.b1")));
    Tensor h2 = relu(affine(h1, bind("corr.w2"), bind("corr.b2")));
    return sigmoid(affine(h2, bind("corr.w3"), bind("corr.b3")));
  }

  std::uint64_t param_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [name, p] : params_) {
      h = fnv1a(name, h);
      for (double v : p.value) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
          h ^= (bits >> (8 * i)) & 0xff;
          h *= 0x100000001b3ull;
        }
      }
    }
    return h;
  }

 private:
  double eval(const std::vector<double>& f_v, const std::vector<double>& f_a,
              std::vector<double>* h2_out) const {
    if (f_v.size() != cfg_.dim_v || f_a.size() != cfg_.dim_a)
      throw DimensionError("correlation tower: feature dims " + std::to_string(f_v.size()) + "/" +
                           std::to_string(f_a.size()) + " do not match config " +
                           std::to_string(cfg_.dim_v) + "/" + std::to_string(cfg_.dim_a));
    ++call_count_;
    std::vector<double> in = f_v;
    in.insert(in.end(), f_a.begin(), f_a.end());
    auto layer = [&](const std::vector<double>& x, const char* wn, const char* bn, bool act) {
      const auto& w = params_.at(wn);
      const auto& b = params_.at(bn);
      std::vector<double> y(w.shape[0]);
      for (std::size_t o = 0; o < w.shape[0]; ++o) {
        double acc = b.value[o];
        for (std::size_t i = 0; i < w.shape[1]; ++i) acc += w.value[o * w.shape[1] + i] * x[i];
        y[o] = act ? std::max(0.0, acc) : acc;
      }
      return y;
    };
    std::vector<double> h1 = layer(in, "corr.w1", "corr.b1", true);
    std::vector<double> h2 = layer(h1, "corr.w2", "corr.b2", true);
    if (h2_out) *h2_out = h2;
    std::vector<double> z = layer(h2, "corr.w3", "corr.b3", false);
    const double v = z[0];
    return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }

  CorrelationTowerConfig cfg_;
  ParamMap params_;
  bool frozen_ = false;
  mutable long call_count_ = 0;
};

// Negative pairs: f_v from video A, f_a from video B, where the two videos'
// top-level label sets are disjoint. One negative per input example,
// deterministic under seed.
inline std::vector<CorrelationExample> make_negative_pairs(
    const std::vector<MultiModalExample>& examples, const Taxonomy& taxonomy,
    std::uint64_t seed) {
  std::set<int> tops_seen;
  std::vector<std::set<int>> tops(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (int l : examples[i].labels) tops[i].insert(taxonomy.top_level_of(l));
    tops_seen.insert(tops[i].begin(), tops[i].end());
  }
  if (tops_seen.size() < 2)
    throw DataError("make_negative_pairs: need at least two distinct top-level labels, found " +
                    std::to_string(tops_seen.size()));
  Rng rng(seed ^ 0xA5A5A5A5DEADBEEFull);
  std::vector<CorrelationExample> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& a = examples[i];
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const std::size_t j = rng.uniform_index(examples.size());
      if (j == i) continue;
      bool disjoint = true;
      for (int t : tops[i])
        if (tops[j].count(t)) {
          disjoint = false;
          break;
        }
      if (!disjoint) continue;
      const auto& b = examples[j];
      CorrelationExample neg;
      neg.f_v = pool_modality(a.video, a.frames, a.dim_video, a.true_length);
      neg.f_a = pool_modality(b.audio, b.frames, b.dim_audio, b.true_length);
      neg.y = 0;
      out.push_back(std::move(neg));
      break;
    }
  }
  return out;
}

struct CorrelationTrainReport {
  double accuracy = 0.0;
  double error_rate = 0.0;  // percent
  double fpr = 0.0;
  double fnr = 0.0;
  std::vector<double> epoch_losses;
};

struct CorrelationTrainConfig {
  AdamConfig adam{1e-2, 0.9, 0.999, 1e-8};
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  double w_neg = 2.0;  // negative-class loss weight
  double threshold = 0.5;
  bool hard_negative_mining = false;  // re-train each epoch on highest-y' negatives
  std::uint64_t seed = 1;
};

// Minimizes the weighted correlation loss, freezes the tower, and reports
// accuracy / FPR / FNR at the configured threshold.
inline CorrelationTrainReport train_correlation_tower(CorrelationTower& tower,
                                                      const std::vector<CorrelationExample>& pairs,
                                                      const CorrelationTrainConfig& cfg) {
  if (tower.frozen()) throw ContractError("train_correlation_tower: tower already frozen");
  bool has_pos = false, has_neg = false;
  for (const auto& p : pairs) (p.y ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw DataError("train_correlation_tower: need both positive and negative pairs");

  AdamState state;
  Rng rng(cfg.seed ^ 0xC0FFEE1234ull);
  CorrelationTrainReport report;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order;
    if (cfg.hard_negative_mining && epoch > 0) {
      // Keep all positives; keep the negatives the tower currently finds
      // hardest (highest y'), matched in count to the positives.
      std::vector<std::pair<double, std::size_t>> negs;
      std::size_t n_pos = 0;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].y) {
          order.push_back(i);
          ++n_pos;
        } else {
          negs.emplace_back(tower.forward(pairs[i].f_v, pairs[i].f_a), i);
        }
      }
      std::sort(negs.begin(), negs.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      for (std::size_t k = 0; k < std::min(n_pos, negs.size()); ++k)
        order.push_back(negs[k].second);
    } else {
      order.resize(pairs.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    }
    rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      GradMap batch_grads;
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = pairs[order[k]];
        Tape tape;
        ParamBinder bind(tape, tower.params());
        Tensor y_prime = tower.forward_tape(tape, bind, ex.f_v, ex.f_a);
        Tensor p = clamp(y_prime, 1e-12, 1.0 - 1e-12);
        Tensor one_minus = sub(tape.scalar_const(1.0), p);
        Tensor loss = scale(add(scale(log_op(p), static_cast<double>(ex.y)),
                                scale(log_op(one_minus), cfg.w_neg * (1 - ex.y))),
                            -1.0);
        tape.backward(loss);
        batch_loss += loss.scalar();
        for (auto& [name, g] : bind.collect_grads()) {
          auto& acc = batch_grads[name];
          if (acc.empty()) acc.assign(g.size(), 0.0);
          for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& [name, g] : batch_grads)
        for (auto& v : g) v *= inv;
      adam_step(tower.params(), batch_grads, state, cfg.adam);
      epoch_loss += batch_loss;
      seen += end - start;
    }
    report.epoch_losses.push_back(seen ? epoch_loss / static_cast<double>(seen) : 0.0);
  }
  tower.freeze();

  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (const auto& ex : pairs) {
    const int pred = correlation_gate(tower.forward(ex.f_v, ex.f_a), cfg.threshold);
    if (ex.y == 1 && pred == 1) ++tp;
    if (ex.y == 1 && pred == 0) ++fn;
    if (ex.y == 0 && pred == 0) ++tn;
    if (ex.y == 0 && pred == 1) ++fp;
  }
  const double n = static_cast<double>(pairs.size());
  report.accuracy = static_cast<double>(tp + tn) / n;
  report.error_rate = 100.0 * (1.0 - report.accuracy);
  report.fpr = (fp + tn) ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0;
  report.fnr = (fn + tp) ? static_cast<double>(fn) / static_cast<double>(fn + tp) : 0.0;
  return report;
}

}  // namespace crossmodal

#endif
