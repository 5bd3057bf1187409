#include <doctest.h>

#include <cmath>

#include "crossmodal/data_synth.hpp"
#include "crossmodal/report.hpp"
#include "crossmodal/train.hpp"

using namespace crossmodal;

namespace {

SynthConfig tiny_synth() {
  SynthConfig c;
  c.num_categories = 3;
  c.children_per_category = 1;
  c.leaves_per_child = 2;
  c.examples_per_class = 12;
  c.frames = 16;
  c.dim_video = 10;
  c.dim_audio = 6;
  c.noise_sigma = 0.2;
  c.seed = 77;
  c.shift_delta = 4;
  return c;
}

ModelConfig tiny_model(const SynthConfig& s, Backbone b, FusionVariant v,
                       std::size_t num_labels, std::size_t corr_dim = 0) {
  ModelConfig m;
  m.backbone = b;
  m.variant = v;
  m.dim_video = s.dim_video;
  m.dim_audio = s.dim_audio;
  m.frames = s.frames;
  m.num_labels = num_labels;
  m.rnn_hidden = 6;
  m.heads = 2;
  m.head_dim = 4;
  m.clusters_v = 3;
  m.clusters_a = 2;
  m.head_hidden = 12;
  m.corr_feature_dim = corr_dim;
  return m;
}

// A frozen tower whose output is hardwired to y' ~ 0 (gate never opens).
CorrelationTower zero_tower(std::size_t dv, std::size_t da) {
  CorrelationTower tower({dv, da, 4, 4}, 1);
  tower.params()["corr.w3"].value.assign(4, 0.0);
  tower.params()["corr.b3"].value = {-50.0};
  tower.freeze();
  return tower;
}

}  // namespace

TEST_CASE("gate-collapse: CM-G with y'=0 matches L per-step losses within 1e-10") {
  Corpus corpus = generate_corpus(tiny_synth());
  CorrelationTower tower = zero_tower(corpus.config.dim_video, corpus.config.dim_audio);
  TrainConfig tcfg;
  tcfg.max_epochs = 2;
  tcfg.batch_size = 8;
  tcfg.seed = 5;
  for (Backbone b : {Backbone::Rnn, Backbone::Transformer, Backbone::NetVlad}) {
    ModelConfig late = tiny_model(corpus.config, b, FusionVariant::Late, corpus.taxonomy.size());
    ModelConfig gated = late;
    gated.variant = FusionVariant::CrossModalGated;
    TrainResult rl = train_classifier(late, tcfg, corpus.train, corpus.valid, nullptr);
    TrainResult rg = train_classifier(gated, tcfg, corpus.train, corpus.valid, &tower);
    REQUIRE(rl.step_losses.size() == rg.step_losses.size());
    for (std::size_t i = 0; i < rl.step_losses.size(); ++i)
      CHECK(std::abs(rl.step_losses[i] - rg.step_losses[i]) <= 1e-10);
  }
}

TEST_CASE("E and L variants never call the correlation tower") {
  Corpus corpus = generate_corpus(tiny_synth());
  CorrelationTower tower = zero_tower(corpus.config.dim_video, corpus.config.dim_audio);
  tower.reset_call_count();
  TrainConfig tcfg;
  tcfg.max_epochs = 1;
  tcfg.seed = 2;
  for (FusionVariant v : {FusionVariant::Early, FusionVariant::Late}) {
    ModelConfig cfg = tiny_model(corpus.config, Backbone::Transformer, v, corpus.taxonomy.size());
    TrainResult r = train_classifier(cfg, tcfg, corpus.train, corpus.valid, &tower);
    evaluate(cfg, r.checkpoint.params, corpus.test, corpus.taxonomy, &tower);
  }
  CHECK(tower.call_count() == 0);
}

TEST_CASE("CM variants demand a frozen tower") {
  Corpus corpus = generate_corpus(tiny_synth());
  ModelConfig cfg = tiny_model(corpus.config, Backbone::Transformer,
                               FusionVariant::CrossModalGated, corpus.taxonomy.size());
  TrainConfig tcfg;
  tcfg.max_epochs = 1;
  CHECK_THROWS_AS(train_classifier(cfg, tcfg, corpus.train, corpus.valid, nullptr),
                  ContractError);
  CorrelationTower unfrozen({corpus.config.dim_video, corpus.config.dim_audio, 4, 4}, 1);
  CHECK_THROWS_AS(train_classifier(cfg, tcfg, corpus.train, corpus.valid, &unfrozen),
                  ContractError);
}

TEST_CASE("early stopping returns the minimum-validation-loss epoch") {
  Corpus corpus = generate_corpus(tiny_synth());
  TrainConfig tcfg;
  tcfg.max_epochs = 6;
  tcfg.adam.lr = 5e-2;  // deliberately unstable so validation loss wobbles
  tcfg.seed = 3;
  ModelConfig cfg = tiny_model(corpus.config, Backbone::Transformer, FusionVariant::Late,
                               corpus.taxonomy.size());
  TrainResult r = train_classifier(cfg, tcfg, corpus.train, corpus.valid, nullptr);
  double best = r.log[0].valid_loss;
  std::size_t best_epoch = 0;
  for (const auto& l : r.log)
    if (l.valid_loss < best) {
      best = l.valid_loss;
      best_epoch = l.epoch;
    }
  CHECK(r.checkpoint.best_valid_loss == best);
  CHECK(r.checkpoint.epoch == best_epoch);
}

TEST_CASE("training is deterministic: identical configs give identical parameters") {
  Corpus corpus = generate_corpus(tiny_synth());
  ModelConfig cfg = tiny_model(corpus.config, Backbone::Rnn, FusionVariant::Late,
                               corpus.taxonomy.size());
  TrainConfig tcfg;
  tcfg.max_epochs = 2;
  tcfg.seed = 9;
  TrainResult a = train_classifier(cfg, tcfg, corpus.train, corpus.valid, nullptr);
  TrainResult b = train_classifier(cfg, tcfg, corpus.train, corpus.valid, nullptr);
  CHECK(a.step_losses == b.step_losses);
  for (const auto& [name, p] : a.checkpoint.params)
    CHECK(p.value == b.checkpoint.params.at(name).value);
}

TEST_CASE("loss decreases over the first epochs for every variant (smoke)") {
  Corpus corpus = generate_corpus(tiny_synth());
  auto pairs = make_correlation_split(corpus.train, corpus.taxonomy, 1);
  CorrelationTower tower({corpus.config.dim_video, corpus.config.dim_audio, 8, 8}, 1);
  CorrelationTrainConfig ccfg;
  ccfg.epochs = 3;
  ccfg.adam.lr = 5e-3;
  train_correlation_tower(tower, pairs, ccfg);

  TrainConfig tcfg;
  tcfg.max_epochs = 3;
  tcfg.adam.lr = 2e-3;
  tcfg.seed = 4;
  for (FusionVariant v : {FusionVariant::Early, FusionVariant::Late,
                          FusionVariant::CrossModalGated, FusionVariant::CrossModalConcat}) {
    const std::size_t corr_dim = v == FusionVariant::CrossModalConcat ? tower.feature_dim() : 0;
    ModelConfig cfg = tiny_model(corpus.config, Backbone::Transformer, v, corpus.taxonomy.size(),
                                 corr_dim);
    const CorrelationTower* t =
        (v == FusionVariant::CrossModalGated || v == FusionVariant::CrossModalConcat) ? &tower
                                                                                      : nullptr;
    TrainResult r = train_classifier(cfg, tcfg, corpus.train, corpus.valid, t);
    CHECK(r.log.back().train_loss < r.log.front().train_loss);
  }
}

TEST_CASE("evaluate is deterministic and produces a structured report") {
  Corpus corpus = generate_corpus(tiny_synth());
  ModelConfig cfg = tiny_model(corpus.config, Backbone::Transformer, FusionVariant::Late,
                               corpus.taxonomy.size());
  TrainConfig tcfg;
  tcfg.max_epochs = 1;
  TrainResult r = train_classifier(cfg, tcfg, corpus.train, corpus.valid, nullptr);
  MetricsReport rep1 = evaluate(cfg, r.checkpoint.params, corpus.test, corpus.taxonomy);
  MetricsReport rep2 = evaluate(cfg, r.checkpoint.params, corpus.test, corpus.taxonomy);
  CHECK(rep1.overall.gap == rep2.overall.gap);
  CHECK(rep1.levels.size() == 4);  // levels 0..3 always reported
  CHECK(rep1.categories.size() == corpus.taxonomy.roots().size());
  CHECK(render_metrics_report(rep1, ReportFormat::Text) ==
        render_metrics_report(rep2, ReportFormat::Text));
}

TEST_CASE("suite: structure, determinism, delta arithmetic") {
  SuiteConfig suite;
  suite.synth = tiny_synth();
  suite.train.max_epochs = 1;
  suite.train.batch_size = 16;
  suite.corr.epochs = 2;
  suite.backbones = {Backbone::Transformer};
  suite.variants = {FusionVariant::Late, FusionVariant::CrossModalGated};
  suite.seeds = {1, 2};
  suite.test_resamples = 2;
  suite.threads = 2;
  suite.model = tiny_model(suite.synth, Backbone::Transformer, FusionVariant::Late, 0);

  SuiteResult res = run_experiment_suite(suite);
  CHECK(!res.partial);
  CHECK(res.runs.size() == 4);
  for (const auto& r : res.runs) {
    CHECK(r.ok);
    CHECK(r.reports.size() == 2);
  }
  CHECK(res.find(Backbone::Transformer, FusionVariant::Late, 1) != nullptr);
  CHECK(res.find(Backbone::Transformer, FusionVariant::Early, 1) == nullptr);

  // delta column is an arithmetic consequence of the metric columns
  CellStats l = cell_stats(res, Backbone::Transformer, FusionVariant::Late);
  CellStats g = cell_stats(res, Backbone::Transformer, FusionVariant::CrossModalGated);
  REQUIRE(l.present);
  REQUIRE(g.present);
  const std::string csv = render_suite(res, ReportFormat::Csv);
  char expect[64];
  std::snprintf(expect, sizeof(expect), "%.4f", l.hit1.mean - g.hit1.mean);
  CHECK(csv.find(std::string("CM-G,hit1_err,") ) != std::string::npos);
  CHECK(csv.find(expect) != std::string::npos);

  SuiteResult res2 = run_experiment_suite(suite);
  CHECK(render_suite(res, ReportFormat::Text) == render_suite(res2, ReportFormat::Text));
  CHECK(render_suite(res, ReportFormat::Csv) == render_suite(res2, ReportFormat::Csv));
}
