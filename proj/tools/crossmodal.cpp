// Command-line front end: data generation, two-phase training, evaluation,
// experiment suites, and corpus reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crossmodal/config.hpp"
#include "crossmodal/report.hpp"
#include "crossmodal/serialize.hpp"
#include "crossmodal/train.hpp"

namespace {

using namespace crossmodal;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::uint64_t tower_hash(const CorrelationTowerConfig& c) {
  return fnv1a("corr;dv=" + std::to_string(c.dim_v) + ";da=" + std::to_string(c.dim_a) +
               ";h1=" + std::to_string(c.hidden1) + ";h2=" + std::to_string(c.hidden2));
}

void save_tower(const std::string& path, const CorrelationTower& tower,
                const CorrelationTrainReport& report) {
  Checkpoint ck;
  ck.config_hash = tower_hash(tower.config());
  ck.best_valid_loss = report.epoch_losses.empty() ? 0.0 : report.epoch_losses.back();
  ck.epoch = static_cast<std::uint32_t>(report.epoch_losses.size());
  ck.params = tower.params();
  save_checkpoint(path, ck);
}

CorrelationTower load_tower(const std::string& path, std::size_t dim_v, std::size_t dim_a) {
  Checkpoint ck = load_checkpoint(path);
  const auto w1 = ck.params.find("corr.w1");
  const auto w2 = ck.params.find("corr.w2");
  if (w1 == ck.params.end() || w2 == ck.params.end())
    throw DataError("checkpoint is not a correlation tower: " + path);
  CorrelationTowerConfig cfg{dim_v, dim_a, w1->second.shape[0], w2->second.shape[0]};
  if (ck.config_hash != tower_hash(cfg))
    throw DataError("correlation checkpoint does not match corpus dims " + std::to_string(dim_v) +
                    "/" + std::to_string(dim_a) + ": " + path);
  CorrelationTower tower(cfg, 0);
  tower.params() = ck.params;
  tower.freeze();
  return tower;
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "text";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "flat key=value config file");
  cmd->add_option("--out-dir", a.out_dir, "output directory");
  cmd->add_option("--format", a.format, "report format")->check(CLI::IsMember({"text", "csv"}));
  cmd->add_option("--seed", a.seed, "seed override")->each([&a](const std::string&) {
    a.seed_set = true;
  });
}

SuiteConfig load_suite_config(const CommonArgs& a) {
  SuiteConfig cfg;
  if (!a.config_path.empty()) cfg = apply_config(KeyValueConfig::from_file(a.config_path));
  return cfg;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open output file: " + path);
  os << content;
}

std::string taxonomy_text(const Taxonomy& t) {
  std::string out = "# one ':'-separated label path per line\n";
  for (std::size_t id = 0; id < t.size(); ++id) out += t.node(static_cast<int>(id)).full_path + "\n";
  return out;
}

ModelConfig model_config_for(const SuiteConfig& suite, const Corpus& corpus,
                             const CorrelationTower* tower) {
  ModelConfig m = suite.model;
  m.dim_video = corpus.config.dim_video;
  m.dim_audio = corpus.config.dim_audio;
  m.frames = corpus.config.frames;
  m.num_labels = corpus.taxonomy.size();
  m.corr_feature_dim =
      (m.variant == FusionVariant::CrossModalConcat && tower) ? tower->feature_dim() : 0;
  return m;
}

std::string checkpoint_name(const ModelConfig& m, std::uint64_t seed) {
  return "model-" + to_string(m.backbone) + "-" + to_string(m.variant) + "-seed" +
         std::to_string(seed) + ".ckpt";
}

int run(int argc, char** argv) {
  CLI::App app{"cross-modal sequence classification experiments"};
  app.require_subcommand(1);

  CommonArgs gen_args, corr_args, train_args, eval_args, suite_args, report_args;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  add_common(gen, gen_args);

  auto* corr = app.add_subcommand("train-corr", "train and freeze the correlation tower");
  add_common(corr, corr_args);
  std::string corr_corpus;
  corr->add_option("--corpus", corr_corpus, "corpus file (default <out-dir>/corpus.bin)");

  auto* train = app.add_subcommand("train", "train one classifier variant");
  add_common(train, train_args);
  std::string train_corpus, train_corr_ckpt, train_backbone, train_variant;
  train->add_option("--corpus", train_corpus, "corpus file (default <out-dir>/corpus.bin)");
  train->add_option("--corr-checkpoint", train_corr_ckpt,
                    "frozen tower checkpoint (default <out-dir>/corr.ckpt; CM variants only)");
  train->add_option("--backbone", train_backbone, "rnn|transformer|netvlad");
  train->add_option("--variant", train_variant, "E|L|CM-G|CM-C");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval_cmd, eval_args);
  std::string eval_corpus, eval_ckpt, eval_corr_ckpt, eval_backbone, eval_variant;
  eval_cmd->add_option("--corpus", eval_corpus, "corpus file (default <out-dir>/corpus.bin)");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval_cmd->add_option("--corr-checkpoint", eval_corr_ckpt,
                       "frozen tower checkpoint (CM variants only)");
  eval_cmd->add_option("--backbone", eval_backbone, "rnn|transformer|netvlad");
  eval_cmd->add_option("--variant", eval_variant, "E|L|CM-G|CM-C");

  auto* suite = app.add_subcommand("suite", "run the full experiment matrix");
  add_common(suite, suite_args);
  std::string suite_seeds, suite_backbones, suite_variants;
  suite->add_option("--seeds", suite_seeds, "comma-separated run seeds");
  suite->add_option("--backbones", suite_backbones, "comma-separated backbones");
  suite->add_option("--variants", suite_variants, "comma-separated variants");

  auto* report = app.add_subcommand("report", "summarize a corpus file");
  add_common(report, report_args);
  std::string report_corpus;
  report->add_option("--corpus", report_corpus, "corpus file (default <out-dir>/corpus.bin)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto default_path = [](const CommonArgs& a, const std::string& given, const char* name) {
    return given.empty() ? a.out_dir + "/" + name : given;
  };

  if (gen->parsed()) {
    SuiteConfig cfg = load_suite_config(gen_args);
    if (gen_args.seed_set) cfg.synth.seed = gen_args.seed;
    std::filesystem::create_directories(gen_args.out_dir);
    Corpus corpus = generate_corpus(cfg.synth);
    write_corpus(gen_args.out_dir + "/corpus.bin", corpus);
    write_text_file(gen_args.out_dir + "/taxonomy.txt", taxonomy_text(corpus.taxonomy));
    if (gen_args.format == "csv") {
      std::printf("key,value\ntrain,%zu\nvalid,%zu\ntest,%zu\nlabels,%zu\nsingle_hit1,%.4f\njoint_hit1,%.4f\n",
                  corpus.train.size(), corpus.valid.size(), corpus.test.size(),
                  corpus.taxonomy.size(), corpus.certificate.single_modality_hit1,
                  corpus.certificate.joint_alignment_hit1);
    } else {
      dump_corpus_text(std::cout, corpus, 3);
    }
    return kExitOk;
  }

  if (corr->parsed()) {
    SuiteConfig cfg = load_suite_config(corr_args);
    if (corr_args.seed_set) cfg.corr.seed = corr_args.seed;
    std::filesystem::create_directories(corr_args.out_dir);
    Corpus corpus = read_corpus(default_path(corr_args, corr_corpus, "corpus.bin"));
    CorrelationTower tower({corpus.config.dim_video, corpus.config.dim_audio, 16, 16},
                           cfg.corr.seed);
    auto pairs = make_correlation_split(corpus.train, corpus.taxonomy, cfg.corr.seed);
    CorrelationTrainReport rep = train_correlation_tower(tower, pairs, cfg.corr);
    save_tower(corr_args.out_dir + "/corr.ckpt", tower, rep);
    if (corr_args.format == "csv") {
      std::printf("accuracy,error_rate,fpr,fnr\n%.6f,%.4f,%.6f,%.6f\n", rep.accuracy,
                  rep.error_rate, rep.fpr, rep.fnr);
    } else {
      std::printf("correlation tower: accuracy %.4f, error rate %.2f%%, fpr %.4f, fnr %.4f\n",
                  rep.accuracy, rep.error_rate, rep.fpr, rep.fnr);
      for (std::size_t e = 0; e < rep.epoch_losses.size(); ++e)
        std::printf("epoch %zu loss %.6f\n", e, rep.epoch_losses[e]);
    }
    return kExitOk;
  }

  if (train->parsed()) {
    SuiteConfig cfg = load_suite_config(train_args);
    if (!train_backbone.empty()) cfg.model.backbone = parse_backbone(train_backbone);
    if (!train_variant.empty()) cfg.model.variant = parse_variant(train_variant);
    if (train_args.seed_set) cfg.train.seed = train_args.seed;
    std::filesystem::create_directories(train_args.out_dir);
    Corpus corpus = read_corpus(default_path(train_args, train_corpus, "corpus.bin"));
    CorrelationTower tower;
    const CorrelationTower* tower_ptr = nullptr;
    if (cfg.model.variant == FusionVariant::CrossModalGated ||
        cfg.model.variant == FusionVariant::CrossModalConcat) {
      tower = load_tower(default_path(train_args, train_corr_ckpt, "corr.ckpt"),
                         corpus.config.dim_video, corpus.config.dim_audio);
      tower_ptr = &tower;
    }
    ModelConfig mcfg = model_config_for(cfg, corpus, tower_ptr);
    TrainResult result = train_classifier(mcfg, cfg.train, corpus.train, corpus.valid, tower_ptr);
    const std::string path = train_args.out_dir + "/" + checkpoint_name(mcfg, cfg.train.seed);
    save_checkpoint(path, result.checkpoint);
    if (train_args.format == "csv") {
      std::printf("epoch,train_loss,valid_loss,lr\n");
      for (const auto& l : result.log)
        std::printf("%zu,%.6f,%.6f,%.6g\n", l.epoch, l.train_loss, l.valid_loss, l.lr);
    } else {
      for (const auto& l : result.log)
        std::printf("epoch %zu train %.6f valid %.6f lr %.6g\n", l.epoch, l.train_loss,
                    l.valid_loss, l.lr);
      std::printf("best epoch %u valid %.6f -> %s\n", result.checkpoint.epoch,
                  result.checkpoint.best_valid_loss, path.c_str());
    }
    return kExitOk;
  }

  if (eval_cmd->parsed()) {
    SuiteConfig cfg = load_suite_config(eval_args);
    if (!eval_backbone.empty()) cfg.model.backbone = parse_backbone(eval_backbone);
    if (!eval_variant.empty()) cfg.model.variant = parse_variant(eval_variant);
    Corpus corpus = read_corpus(default_path(eval_args, eval_corpus, "corpus.bin"));
    CorrelationTower tower;
    const CorrelationTower* tower_ptr = nullptr;
    if (cfg.model.variant == FusionVariant::CrossModalGated ||
        cfg.model.variant == FusionVariant::CrossModalConcat) {
      if (eval_corr_ckpt.empty()) eval_corr_ckpt = eval_args.out_dir + "/corr.ckpt";
      tower = load_tower(eval_corr_ckpt, corpus.config.dim_video, corpus.config.dim_audio);
      tower_ptr = &tower;
    }
    ModelConfig mcfg = model_config_for(cfg, corpus, tower_ptr);
    Checkpoint ck = load_checkpoint(eval_ckpt, mcfg.hash());
    MetricsReport rep = evaluate(mcfg, ck.params, corpus.test, corpus.taxonomy, tower_ptr,
                                 cfg.top_k);
    std::fputs(render_metrics_report(rep, parse_format(eval_args.format)).c_str(), stdout);
    return kExitOk;
  }

  if (suite->parsed()) {
    SuiteConfig cfg = load_suite_config(suite_args);
    if (!suite_backbones.empty()) cfg.backbones = parse_backbone_list(suite_backbones);
    if (!suite_variants.empty()) cfg.variants = parse_variant_list(suite_variants);
    if (!suite_seeds.empty()) {
      cfg.seeds.clear();
      std::stringstream ss(suite_seeds);
      std::string item;
      while (std::getline(ss, item, ',')) cfg.seeds.push_back(std::stoull(item));
    }
    if (suite_args.seed_set) cfg.synth.seed = suite_args.seed;
    std::filesystem::create_directories(suite_args.out_dir);
    SuiteResult res = run_experiment_suite(cfg);
    const ReportFormat f = parse_format(suite_args.format);
    const std::string rendered = render_suite(res, f);
    write_text_file(suite_args.out_dir + (f == ReportFormat::Csv ? "/suite.csv" : "/suite.txt"),
                    rendered);
    std::fputs(rendered.c_str(), stdout);
    return res.partial ? kExitData : kExitOk;
  }

  if (report->parsed()) {
    Corpus corpus = read_corpus(default_path(report_args, report_corpus, "corpus.bin"));
    if (report_args.format == "csv") {
      std::printf("key,value\ntrain,%zu\nvalid,%zu\ntest,%zu\nlabels,%zu\nmax_level,%d\n"
                  "single_hit1,%.4f\njoint_hit1,%.4f\nadvantage,%.4f\n",
                  corpus.train.size(), corpus.valid.size(), corpus.test.size(),
                  corpus.taxonomy.size(), corpus.taxonomy.max_level(),
                  corpus.certificate.single_modality_hit1,
                  corpus.certificate.joint_alignment_hit1, corpus.certificate.advantage());
    } else {
      dump_corpus_text(std::cout, corpus, 0);
      std::printf("labels: %zu (max level %d)\n", corpus.taxonomy.size(),
                  corpus.taxonomy.max_level());
      for (int root : corpus.taxonomy.roots())
        std::printf("  category %s\n", corpus.taxonomy.node(root).full_path.c_str());
    }
    return kExitOk;
  }

  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const crossmodal::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const crossmodal::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
}
