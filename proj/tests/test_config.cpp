#include <doctest.h>

#include <sstream>

#include "crossmodal/config.hpp"
#include "crossmodal/report.hpp"

using namespace crossmodal;

TEST_CASE("key-value parsing: comments, whitespace, errors") {
  std::stringstream ss(
      "# experiment defaults\n"
      "train.lr = 0.001   # bumped\n"
      "\n"
      "synth.seed=9\n"
      "suite.seeds = 1, 2, 3\n");
  KeyValueConfig kv = KeyValueConfig::from_stream(ss);
  CHECK(kv.get_double("train.lr", 0.0) == 0.001);
  CHECK(kv.get_u64("synth.seed", 0) == 9);
  CHECK(kv.get_u64_list("suite.seeds", {}) == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(kv.get_double("train.beta1", 0.9) == 0.9);  // fallback

  std::stringstream bad("no_equals_sign\n");
  CHECK_THROWS_AS(KeyValueConfig::from_stream(bad), ConfigError);
  std::stringstream bad2("train.lr = abc\n");
  CHECK_THROWS_AS(KeyValueConfig::from_stream(bad2).get_double("train.lr", 0), ConfigError);
}

TEST_CASE("apply_config: maps keys onto the suite config, rejects unknown keys") {
  std::stringstream ss(
      "synth.num_categories = 4\n"
      "synth.noise_sigma = 0.5\n"
      "train.max_epochs = 3\n"
      "train.scheduler_patience = 4\n"
      "corr.w_neg = 3.5\n"
      "model.backbone = netvlad\n"
      "model.variant = CM-C\n"
      "suite.variants = L,CM-G\n"
      "suite.threads = 2\n");
  SuiteConfig cfg = apply_config(KeyValueConfig::from_stream(ss));
  CHECK(cfg.synth.num_categories == 4);
  CHECK(cfg.synth.noise_sigma == 0.5);
  CHECK(cfg.train.max_epochs == 3);
  CHECK(cfg.train.scheduler_patience == 4);
  CHECK(cfg.corr.w_neg == 3.5);
  CHECK(cfg.model.backbone == Backbone::NetVlad);
  CHECK(cfg.model.variant == FusionVariant::CrossModalConcat);
  REQUIRE(cfg.variants.size() == 2);
  CHECK(cfg.variants[1] == FusionVariant::CrossModalGated);
  CHECK(cfg.threads == 2);

  std::stringstream unknown("train.learning_rate = 0.1\n");
  CHECK_THROWS_AS(apply_config(KeyValueConfig::from_stream(unknown)), ConfigError);
}

TEST_CASE("enum parsing") {
  CHECK(parse_backbone("rnn") == Backbone::Rnn);
  CHECK(parse_variant("E") == FusionVariant::Early);
  CHECK_THROWS_AS(parse_backbone("lstm"), ConfigError);
  CHECK_THROWS_AS(parse_variant("CM"), ConfigError);
  CHECK_THROWS_AS(parse_format("json"), ConfigError);
}
