#include <doctest.h>

#include <cmath>

#include "crossmodal/correlation.hpp"
#include "crossmodal/data_synth.hpp"

using namespace crossmodal;

namespace {

SynthConfig tiny_synth() {
  SynthConfig c;
  c.num_categories = 4;
  c.children_per_category = 1;
  c.leaves_per_child = 2;
  c.examples_per_class = 80;
  c.frames = 20;
  c.dim_video = 12;
  c.dim_audio = 6;
  c.fraction_uncorrelated = 0.25;
  c.noise_sigma = 0.15;
  c.theme_amp = 3.0;
  c.seed = 17;
  c.shift_delta = 4;
  return c;
}

}  // namespace

TEST_CASE("weighted loss hand values") {
  CHECK(weighted_correlation_loss(1, 0.5, 2.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(weighted_correlation_loss(0, 0.5, 2.0) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(weighted_correlation_loss(0, 0.5, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // clamping keeps the loss finite at the boundaries
  CHECK(std::isfinite(weighted_correlation_loss(1, 0.0, 2.0)));
  CHECK(weighted_correlation_loss(1, 0.0, 2.0) == doctest::Approx(-std::log(1e-12)));
  CHECK_THROWS_AS(weighted_correlation_loss(2, 0.5, 2.0), ContractError);
  CHECK_THROWS_AS(weighted_correlation_loss(1, 0.5, 0.0), ConfigError);
}

TEST_CASE("gate thresholding: tie activates, bad thresholds rejected") {
  CHECK(correlation_gate(0.5, 0.5) == 1);
  CHECK(correlation_gate(0.4999, 0.5) == 0);
  CHECK(correlation_gate(0.9, 0.5) == 1);
  CHECK_THROWS_AS(correlation_gate(0.5, 0.0), ConfigError);
  CHECK_THROWS_AS(correlation_gate(0.5, 1.0), ConfigError);
}

TEST_CASE("pool_modality ignores padding rows") {
  // 2 real frames + 2 zero padding rows
  std::vector<double> frames{1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0};
  auto pooled = pool_modality(frames, 4, 2, 2);
  CHECK(pooled == std::vector<double>{2.0, 3.0});
  // and the padding values genuinely don't matter
  std::vector<double> dirty = frames;
  dirty[6] = 99.0;
  CHECK(pool_modality(dirty, 4, 2, 2) == pooled);
  CHECK_THROWS_AS(pool_modality(frames, 4, 2, 0), DataError);
  CHECK_THROWS_AS(pool_modality(frames, 4, 2, 5), DimensionError);
}

TEST_CASE("tower gradient check") {
  CorrelationTower tower({3, 2, 4, 4}, 9);
  std::vector<double> f_v{0.2, -0.5, 0.9}, f_a{0.1, -0.3};
  auto f = [&](Tape& tape, ParamBinder& bind) {
    Tensor y = tower.forward_tape(tape, bind, f_v, f_a);
    Tensor p = clamp(y, 1e-12, 1.0 - 1e-12);
    return scale(log_op(sub(tape.scalar_const(1.0), p)), -2.0);  // negative-pair loss, w_neg=2
  };
  CHECK(gradient_check(f, tower.params()) < 1e-4);
}

TEST_CASE("freezing: params locked, feature requires frozen, eval does not mutate") {
  CorrelationTower tower({2, 2, 4, 4}, 3);
  std::vector<double> f_v{0.1, 0.2}, f_a{0.3, 0.4};
  CHECK_THROWS_AS(tower.feature(f_v, f_a), ContractError);
  const std::uint64_t before = tower.param_hash();
  tower.freeze();
  CHECK_THROWS_AS(tower.params(), ContractError);  // mutable access gone
  const double y1 = tower.forward(f_v, f_a);
  auto feat = tower.feature(f_v, f_a);
  CHECK(feat.size() == tower.feature_dim());
  CHECK(feat[0] == y1);
  for (int i = 0; i < 50; ++i) tower.forward(f_v, f_a);
  CHECK(tower.param_hash() == before);
  CHECK(tower.call_count() >= 52);
}

TEST_CASE("negative pairs: disjoint top-level labels, deterministic") {
  Corpus corpus = generate_corpus(tiny_synth());
  auto negs1 = make_negative_pairs(corpus.train, corpus.taxonomy, 5);
  auto negs2 = make_negative_pairs(corpus.train, corpus.taxonomy, 5);
  REQUIRE(!negs1.empty());
  CHECK(negs1.size() == negs2.size());
  for (std::size_t i = 0; i < negs1.size(); ++i) {
    CHECK(negs1[i].y == 0);
    CHECK(negs1[i].f_v == negs2[i].f_v);
    CHECK(negs1[i].f_a == negs2[i].f_a);
  }
}

TEST_CASE("negative pairs require at least two top-level categories") {
  SynthConfig c = tiny_synth();
  c.num_categories = 2;
  Corpus corpus = generate_corpus(c);
  // restrict to examples of one category only
  std::vector<MultiModalExample> one_cat;
  const int cat0 = corpus.taxonomy.roots()[0];
  for (const auto& ex : corpus.train)
    if (corpus.taxonomy.top_level_of(*ex.labels.begin()) == cat0) one_cat.push_back(ex);
  REQUIRE(!one_cat.empty());
  CHECK_THROWS_AS(make_negative_pairs(one_cat, corpus.taxonomy, 1), DataError);
}

TEST_CASE("training: separable split reaches high accuracy and freezes the tower") {
  Corpus corpus = generate_corpus(tiny_synth());
  auto pairs = make_correlation_split(corpus.train, corpus.taxonomy, 11);
  CorrelationTower tower({corpus.config.dim_video, corpus.config.dim_audio, 16, 16}, 11);
  CorrelationTrainConfig cfg;
  cfg.epochs = 5;
  cfg.adam.lr = 3e-2;
  cfg.seed = 11;
  CorrelationTrainReport rep = train_correlation_tower(tower, pairs, cfg);
  CHECK(tower.frozen());
  CHECK(rep.accuracy >= 0.9);
  CHECK(rep.error_rate == doctest::Approx(100.0 * (1.0 - rep.accuracy)));
  CHECK_THROWS_AS(train_correlation_tower(tower, pairs, cfg), ContractError);
}

TEST_CASE("training requires both classes") {
  CorrelationTower tower({2, 2, 4, 4}, 1);
  std::vector<CorrelationExample> only_pos{{{0.1, 0.2}, {0.3, 0.4}, 1}};
  CHECK_THROWS_AS(train_correlation_tower(tower, only_pos, {}), DataError);
}

TEST_CASE("increasing w_neg weakly decreases FPR on a fixed split") {
  Corpus corpus = generate_corpus(tiny_synth());
  auto pairs = make_correlation_split(corpus.train, corpus.taxonomy, 21);
  auto run = [&](double w_neg) {
    CorrelationTower tower({corpus.config.dim_video, corpus.config.dim_audio, 16, 16}, 21);
    CorrelationTrainConfig cfg;
    cfg.epochs = 8;
    cfg.adam.lr = 3e-2;
    cfg.seed = 21;
    cfg.w_neg = w_neg;
    return train_correlation_tower(tower, pairs, cfg);
  };
  // Up-weighting the negative class biases the classifier toward rejecting
  // uncorrelated pairs, so the false-positive rate cannot go up.
  CHECK(run(5.0).fpr <= run(1.0).fpr + 1e-12);
}
