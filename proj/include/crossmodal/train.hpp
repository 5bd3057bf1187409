#ifndef CROSSMODAL_TRAIN_HPP
#define CROSSMODAL_TRAIN_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "crossmodal/correlation.hpp"
#include "crossmodal/data_synth.hpp"
#include "crossmodal/metrics.hpp"
#include "crossmodal/model.hpp"
#include "crossmodal/optim.hpp"
#include "crossmodal/serialize.hpp"
#include "crossmodal/tensor.hpp"

namespace crossmodal {

struct TrainConfig {
  AdamConfig adam{2e-4, 0.9, 0.999, 1e-8};
  std::size_t batch_size = 32;
  std::size_t max_epochs = 10;
  double scheduler_factor = 0.1;
  std::size_t scheduler_patience = 2;
  std::uint64_t seed = 1;
};

// Per-example cross-modal inputs computed once from the frozen tower.
struct GateInputs {
  double gate = 0.0;
  std::vector<double> feature;
};

inline GateInputs gate_inputs_for(const ModelConfig& cfg, const MultiModalExample& ex,
                                  const CorrelationTower* tower) {
  GateInputs g;
  if (!cfg.cross_modal()) return g;
  if (tower == nullptr || !tower->frozen())
    throw ContractError("cross-modal variants require a frozen correlation tower");
  const std::vector<double> f_v = pool_modality(ex.video, ex.frames, ex.dim_video, ex.true_length);
  const std::vector<double> f_a = pool_modality(ex.audio, ex.frames, ex.dim_audio, ex.true_length);
  if (cfg.variant == FusionVariant::CrossModalGated) {
    g.gate = static_cast<double>(correlation_gate(tower->forward(f_v, f_a), cfg.gate_threshold));
  } else {
    g.gate = 1.0;
    g.feature = tower->feature(f_v, f_a);
  }
  return g;
}

// Per-label sigmoid cross-entropy averaged over labels.
inline Tensor classification_loss(Tape& tape, ParamBinder& bind, const ModelConfig& cfg,
                                  const MultiModalExample& ex, const GateInputs& gate) {
  Tensor logits = model_logits(tape, bind, cfg, ex, gate.gate,
                               gate.feature.empty() ? nullptr : &gate.feature);
  return bce_with_logits_mean(logits, label_targets(ex.labels, cfg.num_labels));
}

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;  // parameters at the best validation epoch
  std::vector<EpochLog> log;
  std::vector<double> step_losses;  // per-batch training losses, in order
};

inline double dataset_loss(const ModelConfig& cfg, const ParamMap& params,
                           const std::vector<MultiModalExample>& examples,
                           const std::vector<GateInputs>& gates) {
  double total = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    Tape tape;
    ParamBinder bind(tape, params, /*requires_grad=*/false);
    total += classification_loss(tape, bind, cfg, examples[i], gates[i]).scalar();
  }
  return examples.empty() ? 0.0 : total / static_cast<double>(examples.size());
}

// Trains one backbone+variant with Adam and a reduce-on-plateau scheduler.
// Returns the parameters from the epoch with the lowest validation loss.
inline TrainResult train_classifier(const ModelConfig& cfg, const TrainConfig& tcfg,
                                    const std::vector<MultiModalExample>& train,
                                    const std::vector<MultiModalExample>& valid,
                                    const CorrelationTower* tower = nullptr) {
  if (cfg.num_labels == 0) throw ConfigError("train_classifier: num_labels is zero");
  if (!(tcfg.adam.lr > 0.0)) throw ConfigError("train_classifier: lr must be positive");
  if (tcfg.batch_size == 0) throw ConfigError("train_classifier: batch_size is zero");
  if (train.empty()) throw DataError("train_classifier: empty training split");
  if (cfg.cross_modal() && (tower == nullptr || !tower->frozen()))
    throw ContractError("train_classifier: CM variants require a frozen correlation tower");
  if (cfg.variant == FusionVariant::CrossModalConcat &&
      cfg.corr_feature_dim != tower->feature_dim())
    throw ConfigError("train_classifier: corr_feature_dim " +
                      std::to_string(cfg.corr_feature_dim) + " != tower feature dim " +
                      std::to_string(tower->feature_dim()));

  std::vector<GateInputs> train_gates(train.size()), valid_gates(valid.size());
  for (std::size_t i = 0; i < train.size(); ++i) train_gates[i] = gate_inputs_for(cfg, train[i], tower);
  for (std::size_t i = 0; i < valid.size(); ++i) valid_gates[i] = gate_inputs_for(cfg, valid[i], tower);

  ParamMap params = init_model_params(cfg, tcfg.seed);
  AdamState state;
  LrScheduler sched(tcfg.adam.lr, tcfg.scheduler_factor, tcfg.scheduler_patience);
  Rng rng(tcfg.seed ^ 0x7E57DA7A5EEDull);

  TrainResult result;
  ParamMap best_params = params;
  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < tcfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    const double lr_now = sched.lr;
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
      GradMap batch_grads;
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        Tape tape;
        ParamBinder bind(tape, params);
        Tensor loss = classification_loss(tape, bind, cfg, train[i], train_gates[i]);
        tape.backward(loss);
        batch_loss += loss.scalar();
        for (auto& [name, g] : bind.collect_grads()) {
          auto& acc = batch_grads[name];
          if (acc.empty()) acc.assign(g.size(), 0.0);
          for (std::size_t j = 0; j < g.size(); ++j) acc[j] += g[j];
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& [name, g] : batch_grads)
        for (auto& v : g) v *= inv;
      AdamConfig step_cfg = tcfg.adam;
      step_cfg.lr = lr_now;
      adam_step(params, batch_grads, state, step_cfg);
      result.step_losses.push_back(batch_loss * inv);
      epoch_loss += batch_loss;
      seen += end - start;
    }

    const double train_loss = epoch_loss / static_cast<double>(seen);
    const double valid_loss = valid.empty() ? train_loss : dataset_loss(cfg, params, valid, valid_gates);
    if (valid_loss < best_valid) {
      best_valid = valid_loss;
      best_params = params;
      best_epoch = epoch;
    }
    sched.step(valid_loss);
    result.log.push_back({epoch, train_loss, valid_loss, lr_now});
  }

  result.checkpoint.version = 1;
  result.checkpoint.config_hash = cfg.hash();
  result.checkpoint.epoch = best_epoch;
  result.checkpoint.best_valid_loss = best_valid;
  result.checkpoint.lr = sched.lr;
  result.checkpoint.params = std::move(best_params);
  return result;
}

// Sigmoid scores for every label of one example.
inline PredictionSet predict_scores(const ModelConfig& cfg, const ParamMap& params,
                                    const MultiModalExample& ex, const GateInputs& gate) {
  Tape tape;
  ParamBinder bind(tape, params, /*requires_grad=*/false);
  Tensor logits = model_logits(tape, bind, cfg, ex, gate.gate,
                               gate.feature.empty() ? nullptr : &gate.feature);
  const std::vector<double>& z = logits.value();
  PredictionSet out;
  for (std::size_t l = 0; l < z.size(); ++l) {
    const double v = z[l];
    out[static_cast<int>(l)] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return out;
}

inline MetricsReport evaluate(const ModelConfig& cfg, const ParamMap& params,
                              const std::vector<MultiModalExample>& test,
                              const Taxonomy& taxonomy, const CorrelationTower* tower = nullptr,
                              std::size_t top_k = 20) {
  std::vector<PredictionSet> preds;
  std::vector<LabelSet> truths;
  preds.reserve(test.size());
  truths.reserve(test.size());
  for (const auto& ex : test) {
    preds.push_back(predict_scores(cfg, params, ex, gate_inputs_for(cfg, ex, tower)));
    truths.push_back(ex.labels);
  }
  return assemble_report(preds, truths, taxonomy, top_k);
}

// ---- experiment suite ----

struct RunKey {
  Backbone backbone = Backbone::Transformer;
  FusionVariant variant = FusionVariant::Late;
  std::uint64_t seed = 1;

  std::string str() const {
    return to_string(backbone) + "/" + to_string(variant) + "/seed" + std::to_string(seed);
  }
  bool operator<(const RunKey& o) const {
    if (backbone != o.backbone) return static_cast<int>(backbone) < static_cast<int>(o.backbone);
    if (variant != o.variant) return static_cast<int>(variant) < static_cast<int>(o.variant);
    return seed < o.seed;
  }
};

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // population std
};

inline MetricStats stats_of(const std::vector<double>& xs) {
  MetricStats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

struct RunResult {
  RunKey key;
  bool ok = false;
  std::string error;
  std::vector<EpochLog> log;
  // one report per test resample; [0] is the corpus's own test split
  std::vector<MetricsReport> reports;
  MetricStats gap_err, map_err, perr_err, hit1_err;  // over resamples, overall scope
};

struct SuiteConfig {
  SynthConfig synth;
  TrainConfig train;
  CorrelationTrainConfig corr;
  std::vector<Backbone> backbones{Backbone::Transformer};
  std::vector<FusionVariant> variants{FusionVariant::Early, FusionVariant::Late,
                                      FusionVariant::CrossModalGated,
                                      FusionVariant::CrossModalConcat};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t test_resamples = 5;
  std::size_t threads = 4;
  std::size_t top_k = 20;
  ModelConfig model;  // backbone/variant/seeded fields overwritten per run
};

struct SuiteResult {
  SuiteConfig config;
  CorrelationTrainReport corr_report;
  SeparabilityCertificate certificate;
  std::vector<RunResult> runs;  // sorted by key
  bool partial = false;         // at least one run failed

  const RunResult* find(Backbone b, FusionVariant v, std::uint64_t seed) const {
    for (const auto& r : runs)
      if (r.key.backbone == b && r.key.variant == v && r.key.seed == seed) return &r;
    return nullptr;
  }
};

inline ModelConfig make_model_config(const SuiteConfig& suite, Backbone b, FusionVariant v,
                                     std::size_t num_labels, std::size_t corr_feature_dim) {
  ModelConfig m = suite.model;
  m.backbone = b;
  m.variant = v;
  m.dim_video = suite.synth.dim_video;
  m.dim_audio = suite.synth.dim_audio;
  m.frames = suite.synth.frames;
  m.num_labels = num_labels;
  m.corr_feature_dim = v == FusionVariant::CrossModalConcat ? corr_feature_dim : 0;
  return m;
}

// Fresh test splits drawn from the same generator distribution; resample 0 is
// the corpus's own test split.
inline std::vector<std::vector<MultiModalExample>> resampled_test_splits(const SynthConfig& synth,
                                                                         const Corpus& corpus,
                                                                         std::size_t resamples) {
  std::vector<std::vector<MultiModalExample>> splits;
  splits.push_back(corpus.test);
  for (std::size_t r = 1; r < resamples; ++r) {
    SynthConfig c = synth;
    // same signal bank, fresh example draws: an i.i.d. test set, not a new task
    c.example_salt = r;
    splits.push_back(generate_corpus(c).test);
  }
  return splits;
}

inline RunResult execute_run(const SuiteConfig& suite, const Corpus& corpus,
                             const CorrelationTower& tower,
                             const std::vector<std::vector<MultiModalExample>>& test_splits,
                             const RunKey& key) {
  RunResult r;
  r.key = key;
  try {
    const std::size_t num_labels = corpus.taxonomy.size();
    ModelConfig mcfg = make_model_config(suite, key.backbone, key.variant, num_labels,
                                         tower.feature_dim());
    TrainConfig tcfg = suite.train;
    tcfg.seed = key.seed;
    const CorrelationTower* t = mcfg.cross_modal() ? &tower : nullptr;
    TrainResult trained = train_classifier(mcfg, tcfg, corpus.train, corpus.valid, t);
    r.log = trained.log;
    std::vector<double> gap, map, perr, hit1;
    for (const auto& split : test_splits) {
      MetricsReport rep = evaluate(mcfg, trained.checkpoint.params, split, corpus.taxonomy, t,
                                   suite.top_k);
      gap.push_back(rep.overall.gap_err());
      map.push_back(rep.overall.map_err());
      perr.push_back(rep.overall.perr_err());
      hit1.push_back(rep.overall.hit1_err());
      r.reports.push_back(std::move(rep));
    }
    r.gap_err = stats_of(gap);
    r.map_err = stats_of(map);
    r.perr_err = stats_of(perr);
    r.hit1_err = stats_of(hit1);
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

// Trains the tower once, then every (backbone, variant, seed) cell. Runs are
// independent and execute in parallel; results are ordered by sorted run key
// so aggregation and rendering are deterministic.
inline SuiteResult run_experiment_suite(const SuiteConfig& suite) {
  if (suite.backbones.empty() || suite.variants.empty())
    throw ConfigError("run_experiment_suite: need at least one backbone and variant");
  if (suite.seeds.empty()) throw ConfigError("run_experiment_suite: need at least one seed");

  SuiteResult out;
  out.config = suite;
  Corpus corpus = generate_corpus(suite.synth);
  out.certificate = corpus.certificate;

  CorrelationTower tower(
      {suite.synth.dim_video, suite.synth.dim_audio, 16, 16}, suite.corr.seed);
  std::vector<CorrelationExample> pairs =
      make_correlation_split(corpus.train, corpus.taxonomy, suite.corr.seed);
  out.corr_report = train_correlation_tower(tower, pairs, suite.corr);

  const auto test_splits =
      resampled_test_splits(suite.synth, corpus, std::max<std::size_t>(1, suite.test_resamples));

  std::vector<RunKey> keys;
  for (Backbone b : suite.backbones)
    for (FusionVariant v : suite.variants)
      for (std::uint64_t s : suite.seeds) keys.push_back({b, v, s});
  std::sort(keys.begin(), keys.end());

  out.runs.resize(keys.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= keys.size()) return;
      out.runs[i] = execute_run(suite, corpus, tower, test_splits, keys[i]);
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(std::max<std::size_t>(1, suite.threads),
                                                      keys.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& r : out.runs)
    if (!r.ok) out.partial = true;
  return out;
}

// Per-cell aggregate: mean over seeds of the per-seed resample-mean errors.
struct CellStats {
  MetricStats gap, map, perr, hit1;
  bool present = false;
};

inline CellStats cell_stats(const SuiteResult& res, Backbone b, FusionVariant v) {
  CellStats c;
  std::vector<double> gap, map, perr, hit1;
  for (const auto& r : res.runs) {
    if (!r.ok || r.key.backbone != b || r.key.variant != v) continue;
    gap.push_back(r.gap_err.mean);
    map.push_back(r.map_err.mean);
    perr.push_back(r.perr_err.mean);
    hit1.push_back(r.hit1_err.mean);
  }
  if (gap.empty()) return c;
  c.present = true;
  c.gap = stats_of(gap);
  c.map = stats_of(map);
  c.perr = stats_of(perr);
  c.hit1 = stats_of(hit1);
  return c;
}

}  // namespace crossmodal

#endif
