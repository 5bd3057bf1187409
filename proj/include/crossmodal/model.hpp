#ifndef CROSSMODAL_MODEL_HPP
#define CROSSMODAL_MODEL_HPP

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "crossmodal/correlation.hpp"
#include "crossmodal/example.hpp"
#include "crossmodal/fusion.hpp"
#include "crossmodal/optim.hpp"
#include "crossmodal/tensor.hpp"

namespace crossmodal {

struct ModelConfig {
  Backbone backbone = Backbone::Transformer;
  FusionVariant variant = FusionVariant::Late;
  std::size_t dim_video = 32;
  std::size_t dim_audio = 8;
  std::size_t frames = 30;
  std::size_t num_labels = 0;

  std::size_t rnn_hidden = 16;
  std::size_t heads = 2;
  std::size_t head_dim = 8;
  std::size_t clusters_v = 8;
  std::size_t clusters_a = 4;
  std::size_t head_hidden = 64;

  // width of the frozen-tower feature appended per frame in CM-C mode
  std::size_t corr_feature_dim = 0;
  // multiplier on that feature before concatenation; exposed as a knob for
  // experiments that need to damp the constant per-video dims
  double corr_feature_scale = 1.0;
  double gate_threshold = 0.5;

  bool cross_modal() const {
    return variant == FusionVariant::CrossModalGated || variant == FusionVariant::CrossModalConcat;
  }
  std::size_t dv_eff() const {
    return dim_video + (variant == FusionVariant::CrossModalConcat ? corr_feature_dim : 0);
  }
  std::size_t da_eff() const {
    return dim_audio + (variant == FusionVariant::CrossModalConcat ? corr_feature_dim : 0);
  }
  std::size_t model_dim() const { return heads * head_dim; }

  std::size_t embedding_dim() const {
    const bool early = variant == FusionVariant::Early;
    switch (backbone) {
      case Backbone::Rnn:
        return early ? rnn_hidden : 2 * rnn_hidden;
      case Backbone::Transformer:
        return early ? model_dim() : 2 * model_dim();
      case Backbone::NetVlad:
        return early ? clusters_v * (dim_video + dim_audio)
                     : clusters_v * dv_eff() + clusters_a * da_eff();
    }
    return 0;
  }

  std::string canonical() const {
    std::string s = "backbone=" + to_string(backbone) + ";variant=" + to_string(variant);
    auto kv = [&](const char* k, std::size_t v) { s += ";" + std::string(k) + "=" + std::to_string(v); };
    kv("dv", dim_video);
    kv("da", dim_audio);
    kv("frames", frames);
    kv("labels", num_labels);
    kv("rnn_hidden", rnn_hidden);
    kv("heads", heads);
    kv("head_dim", head_dim);
    kv("kv", clusters_v);
    kv("ka", clusters_a);
    kv("head_hidden", head_hidden);
    kv("corr_feat", corr_feature_dim);
    char buf[40];
    std::snprintf(buf, sizeof(buf), ";corr_scale=%.6g", corr_feature_scale);
    s += buf;
    return s;
  }
  std::uint64_t hash() const { return fnv1a(canonical()); }
};

namespace model_detail {

inline void init_rnn_tower(ParamMap& p, const std::string& m, std::size_t in_dim,
                           std::size_t hidden, std::uint64_t seed) {
  auto add = [&](const std::string& n, Shape shape, std::size_t fan_in) {
    p[n] = init_uniform_fanin(shape, fan_in, seed, n);
  };
  add("rnn." + m + ".w_ih", {hidden, in_dim}, in_dim);
  add("rnn." + m + ".w_hh", {hidden, hidden}, hidden);
  add("rnn." + m + ".b", {hidden}, in_dim);
  add("rnn." + m + ".score", {hidden}, hidden);
}

inline void init_tf_tower(ParamMap& p, const std::string& m, std::size_t in_dim,
                          std::size_t heads, std::size_t head_dim, std::uint64_t seed) {
  auto add = [&](const std::string& n, Shape shape, std::size_t fan_in) {
    p[n] = init_uniform_fanin(shape, fan_in, seed, n);
  };
  for (std::size_t i = 0; i < heads; ++i) {
    const std::string h = "tf." + m + ".h" + std::to_string(i) + ".";
    add(h + "wq", {in_dim, head_dim}, in_dim);
    add(h + "wk", {in_dim, head_dim}, in_dim);
    add(h + "wv", {in_dim, head_dim}, in_dim);
  }
  add("tf." + m + ".wo", {heads * head_dim, heads * head_dim}, heads * head_dim);
}

inline void init_nv_tower(ParamMap& p, const std::string& m, std::size_t in_dim,
                          std::size_t clusters, std::uint64_t seed) {
  auto add = [&](const std::string& n, Shape shape, std::size_t fan_in) {
    p[n] = init_uniform_fanin(shape, fan_in, seed, n);
  };
  add("nv." + m + ".centers", {clusters, in_dim}, in_dim);
  add("nv." + m + ".proj_w", {clusters, in_dim}, in_dim);
  add("nv." + m + ".proj_b", {clusters}, in_dim);
}

// Cross-modal transforms start near zero (tiny weights, small positive bias
// so the ReLU stays live): the cross term then barely perturbs the shared
// tower at step 0 and grows only as far as the data supports it.
inline Parameter init_cross_transform(const Shape& shape, bool is_bias, std::uint64_t seed,
                                      const std::string& name) {
  Rng rng(fnv1a(name) ^ (seed * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull));
  Parameter p;
  p.shape = shape;
  p.value.resize(numel(shape));
  for (auto& v : p.value) v = is_bias ? rng.uniform(0.01, 0.05) : rng.uniform(-0.05, 0.05);
  return p;
}

}  // namespace model_detail

// Every parameter is drawn from a stream seeded by (seed, name), so variants
// sharing a submodule share its exact initial values.
inline ParamMap init_model_params(const ModelConfig& cfg, std::uint64_t seed) {
  using namespace model_detail;
  ParamMap p;
  const bool early = cfg.variant == FusionVariant::Early;
  switch (cfg.backbone) {
    case Backbone::Rnn:
      if (early) {
        init_rnn_tower(p, "e", cfg.dim_video + cfg.dim_audio, cfg.rnn_hidden, seed);
      } else {
        init_rnn_tower(p, "v", cfg.dv_eff(), cfg.rnn_hidden, seed);
        init_rnn_tower(p, "a", cfg.da_eff(), cfg.rnn_hidden, seed);
        if (cfg.cross_modal()) {
          p["f.rnn.v.w"] = init_cross_transform({cfg.frames, cfg.frames}, false, seed, "f.rnn.v.w");
          p["f.rnn.v.b"] = init_cross_transform({cfg.frames}, true, seed, "f.rnn.v.b");
          p["f.rnn.a.w"] = init_cross_transform({cfg.frames, cfg.frames}, false, seed, "f.rnn.a.w");
          p["f.rnn.a.b"] = init_cross_transform({cfg.frames}, true, seed, "f.rnn.a.b");
        }
      }
      break;
    case Backbone::Transformer:
      if (early) {
        init_tf_tower(p, "e", cfg.dim_video + cfg.dim_audio, cfg.heads, cfg.head_dim, seed);
      } else {
        init_tf_tower(p, "v", cfg.dv_eff(), cfg.heads, cfg.head_dim, seed);
        init_tf_tower(p, "a", cfg.da_eff(), cfg.heads, cfg.head_dim, seed);
        if (cfg.cross_modal()) {
          for (std::size_t i = 0; i < cfg.heads; ++i)
            for (const char* m : {"v", "a"}) {
              const std::string base = "f.tf." + std::string(m) + ".h" + std::to_string(i) + ".";
              // Start with active coupling: relu(0.5 L + 0.5) is linear in L
              // near init, so the cross-modal mixing contributes (and receives
              // gradient) from the first step.
              p[base + "w"] = Parameter{{1}, {0.5}};
              p[base + "b"] = Parameter{{1}, {0.5}};
            }
        }
      }
      break;
    case Backbone::NetVlad:
      if (early) {
        init_nv_tower(p, "e", cfg.dim_video + cfg.dim_audio, cfg.clusters_v, seed);
      } else {
        init_nv_tower(p, "v", cfg.dv_eff(), cfg.clusters_v, seed);
        init_nv_tower(p, "a", cfg.da_eff(), cfg.clusters_a, seed);
        if (cfg.cross_modal()) {
          // F_v bridges video assignments (K_v) to the audio cluster space
          // (K_a); F_a the reverse.
          p["f.nv.v.w"] = init_cross_transform({cfg.clusters_a, cfg.clusters_v}, false, seed,
                                               "f.nv.v.w");
          p["f.nv.v.b"] = init_cross_transform({cfg.clusters_a}, true, seed, "f.nv.v.b");
          p["f.nv.a.w"] = init_cross_transform({cfg.clusters_v, cfg.clusters_a}, false, seed,
                                               "f.nv.a.w");
          p["f.nv.a.b"] = init_cross_transform({cfg.clusters_v}, true, seed, "f.nv.a.b");
        }
      }
      break;
  }
  const std::size_t e_dim = cfg.embedding_dim();
  p["head.w1"] = init_uniform_fanin({cfg.head_hidden, e_dim}, e_dim, seed, "head.w1");
  p["head.b1"] = init_uniform_fanin({cfg.head_hidden}, e_dim, seed, "head.b1");
  p["head.w2"] = init_uniform_fanin({cfg.num_labels, cfg.head_hidden}, cfg.head_hidden, seed, "head.w2");
  p["head.b2"] = init_uniform_fanin({cfg.num_labels}, cfg.head_hidden, seed, "head.b2");
  return p;
}

namespace model_detail {

inline Tensor frame_input(Tape& tape, const std::vector<double>& frames, std::size_t t_total,
                          std::size_t dim, const std::vector<double>* appended) {
  if (!appended || appended->empty()) return tape.constant({t_total, dim}, frames);
  const std::size_t w = appended->size();
  std::vector<double> data(t_total * (dim + w));
  for (std::size_t t = 0; t < t_total; ++t) {
    std::copy_n(&frames[t * dim], dim, &data[t * (dim + w)]);
    std::copy_n(appended->data(), w, &data[t * (dim + w) + dim]);
  }
  return tape.constant({t_total, dim + w}, std::move(data));
}

inline RnnTowerTensors bind_rnn(ParamBinder& bind, const std::string& m) {
  return {bind("rnn." + m + ".w_ih"), bind("rnn." + m + ".w_hh"), bind("rnn." + m + ".b"),
          bind("rnn." + m + ".score")};
}

inline TransformerTowerTensors bind_tf(ParamBinder& bind, const std::string& m,
                                       std::size_t heads) {
  TransformerTowerTensors t;
  for (std::size_t i = 0; i < heads; ++i) {
    const std::string h = "tf." + m + ".h" + std::to_string(i) + ".";
    t.heads.push_back({bind(h + "wq"), bind(h + "wk"), bind(h + "wv")});
  }
  t.w_o = bind("tf." + m + ".wo");
  return t;
}

inline NetVladTensors bind_nv(ParamBinder& bind, const std::string& m) {
  return {bind("nv." + m + ".centers"), bind("nv." + m + ".proj_w"), bind("nv." + m + ".proj_b")};
}

inline CrossModalTransform bind_ct(ParamBinder& bind, const std::string& prefix, bool present) {
  CrossModalTransform f;
  f.present = present;
  if (present) {
    f.w = bind(prefix + ".w");
    f.b = bind(prefix + ".b");
  }
  return f;
}

inline std::vector<HeadLogitTransform> bind_head_transforms(ParamBinder& bind,
                                                            const std::string& m,
                                                            std::size_t heads, bool present) {
  std::vector<HeadLogitTransform> fs(heads);
  if (!present) return fs;
  for (std::size_t i = 0; i < heads; ++i) {
    const std::string base = "f.tf." + m + ".h" + std::to_string(i) + ".";
    fs[i] = {bind(base + "w"), bind(base + "b"), true};
  }
  return fs;
}

}  // namespace model_detail

// Per-label logits for one example. `gate` scales the cross-modal injection
// (hard 0/1 for CM-G, 1 for CM-C, ignored otherwise); `corr_feature` is the
// frozen-tower feature appended per frame in CM-C mode.
inline Tensor model_logits(Tape& tape, ParamBinder& bind, const ModelConfig& cfg,
                           const MultiModalExample& ex, double gate = 0.0,
                           const std::vector<double>* corr_feature = nullptr) {
  using namespace model_detail;
  if (ex.dim_video != cfg.dim_video || ex.dim_audio != cfg.dim_audio || ex.frames != cfg.frames)
    throw ConfigError("model_logits: example dims do not match model config");
  const bool concat_feature = cfg.variant == FusionVariant::CrossModalConcat;
  if (concat_feature && (!corr_feature || corr_feature->size() != cfg.corr_feature_dim))
    throw ContractError("model_logits: CM-C requires the correlation feature");
  const bool cross = cfg.cross_modal();
  const double g = cfg.variant == FusionVariant::CrossModalConcat ? 1.0 : gate;

  std::vector<double> scaled_feature;
  if (concat_feature) {
    scaled_feature = *corr_feature;
    for (double& v : scaled_feature) v *= cfg.corr_feature_scale;
  }
  Tensor x_v = frame_input(tape, ex.video, ex.frames, ex.dim_video,
                           concat_feature ? &scaled_feature : nullptr);
  Tensor x_a = frame_input(tape, ex.audio, ex.frames, ex.dim_audio,
                           concat_feature ? &scaled_feature : nullptr);

  Tensor embedding{&tape, 0};
  if (cfg.variant == FusionVariant::Early) {
    Tensor x = early_fusion(x_v, x_a);
    switch (cfg.backbone) {
      case Backbone::Rnn: {
        auto p = bind_rnn(bind, "e");
        Tensor h = rnn_hidden_states(x, p);
        Tensor alpha = attention_weights(h, p.score);
        embedding = reshape(matmul(reshape(alpha, {1, ex.frames}), h), {cfg.rnn_hidden});
        break;
      }
      case Backbone::Transformer: {
        auto p = bind_tf(bind, "e", cfg.heads);
        Tensor y = cross_modal_attention(x, x, p, p, {}, 0.0);
        embedding = reduce_mean(y, 0);
        break;
      }
      case Backbone::NetVlad: {
        auto p = bind_nv(bind, "e");
        Tensor a = netvlad_assignments(x, p);
        embedding = netvlad_descriptor(x, p, a, a, CrossModalTransform{}, 0.0);
        break;
      }
    }
    return classifier_head(embedding, {bind("head.w1"), bind("head.b1"), bind("head.w2"),
                                       bind("head.b2")});
  }

  Tensor e_v{&tape, 0}, e_a{&tape, 0};
  switch (cfg.backbone) {
    case Backbone::Rnn: {
      auto pv = bind_rnn(bind, "v");
      auto pa = bind_rnn(bind, "a");
      auto f_v = bind_ct(bind, "f.rnn.v", cross);
      auto f_a = bind_ct(bind, "f.rnn.a", cross);
      auto [c_v, c_a] = cross_modal_rnn(x_v, x_a, pv, pa, f_v, f_a, g);
      e_v = c_v;
      e_a = c_a;
      break;
    }
    case Backbone::Transformer: {
      auto pv = bind_tf(bind, "v", cfg.heads);
      auto pa = bind_tf(bind, "a", cfg.heads);
      auto f_v = bind_head_transforms(bind, "v", cfg.heads, cross);
      auto f_a = bind_head_transforms(bind, "a", cfg.heads, cross);
      auto [y_v, y_a] = cross_modal_transformer_layer(x_v, x_a, pv, pa, f_v, f_a, g);
      e_v = reduce_mean(y_v, 0);
      e_a = reduce_mean(y_a, 0);
      break;
    }
    case Backbone::NetVlad: {
      auto pv = bind_nv(bind, "v");
      auto pa = bind_nv(bind, "a");
      auto f_v = bind_ct(bind, "f.nv.v", cross);
      auto f_a = bind_ct(bind, "f.nv.a", cross);
      auto [v_v, v_a] = cross_modal_netvlad(x_v, x_a, pv, pa, f_v, f_a, g);
      e_v = v_v;
      e_a = v_a;
      break;
    }
  }
  return late_fusion_head(e_v, e_a,
                          {bind("head.w1"), bind("head.b1"), bind("head.w2"), bind("head.b2")});
}

// Multi-label targets in label-id order 0..num_labels-1.
inline std::vector<double> label_targets(const LabelSet& labels, std::size_t num_labels) {
  std::vector<double> t(num_labels, 0.0);
  for (int l : labels)
    if (l >= 0 && static_cast<std::size_t>(l) < num_labels) t[static_cast<std::size_t>(l)] = 1.0;
  return t;
}

}  // namespace crossmodal

#endif
