// Acceptance suite: one line per criterion, nonzero exit if any fail.
// Usage: acceptance <path-to-cli-binary>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/resource.h>
#include <thread>
#include <tuple>
#include <vector>

#include "crossmodal/config.hpp"
#include "crossmodal/report.hpp"
#include "crossmodal/serialize.hpp"
#include "crossmodal/train.hpp"

using namespace crossmodal;

namespace {

int g_failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s | %-28s | %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> randn(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

ParamMap random_params(std::initializer_list<std::pair<const char*, Shape>> specs, Rng& rng) {
  ParamMap p;
  for (const auto& [name, shape] : specs) {
    Parameter param;
    param.shape = shape;
    param.value = randn(rng, numel(shape));
    p[name] = param;
  }
  return p;
}

// ---- criterion 1: gradient correctness -------------------------------------

void check_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_layer = "none";
  auto record = [&](const char* layer, double err) {
    if (err > worst) {
      worst = err;
      worst_layer = layer;
    }
  };
  Rng rng(101);

  {  // cross-modal RNN (T=4, dims <= 8)
    ParamMap p = random_params({{"v.w_ih", {3, 4}}, {"v.w_hh", {3, 3}}, {"v.b", {3}},
                                {"v.score", {3}}, {"a.w_ih", {3, 2}}, {"a.w_hh", {3, 3}},
                                {"a.b", {3}}, {"a.score", {3}}, {"fv.w", {4, 4}}, {"fv.b", {4}},
                                {"fa.w", {4, 4}}, {"fa.b", {4}}, {"xv", {4, 4}}, {"xa", {4, 2}}},
                               rng);
    record("cross-modal rnn", gradient_check(
        [](Tape&, ParamBinder& bind) {
          RnnTowerTensors pv{bind("v.w_ih"), bind("v.w_hh"), bind("v.b"), bind("v.score")};
          RnnTowerTensors pa{bind("a.w_ih"), bind("a.w_hh"), bind("a.b"), bind("a.score")};
          CrossModalTransform fv{bind("fv.w"), bind("fv.b"), true};
          CrossModalTransform fa{bind("fa.w"), bind("fa.b"), true};
          auto [cv, ca] = cross_modal_rnn(bind("xv"), bind("xa"), pv, pa, fv, fa, 0.7);
          return add(sum_all(mul(cv, cv)), sum_all(mul(ca, ca)));
        },
        p));
  }
  {  // cross-modal transformer
    ParamMap p = random_params({{"v.wq", {4, 3}}, {"v.wk", {4, 3}}, {"v.wv", {4, 3}},
                                {"v.wo", {3, 3}}, {"a.wq", {2, 3}}, {"a.wk", {2, 3}},
                                {"a.wv", {2, 3}}, {"a.wo", {3, 3}}, {"fv.w", {1}}, {"fv.b", {1}},
                                {"fa.w", {1}}, {"fa.b", {1}}, {"xv", {4, 4}}, {"xa", {4, 2}}},
                               rng);
    record("cross-modal transformer", gradient_check(
        [](Tape&, ParamBinder& bind) {
          TransformerTowerTensors pv{{{bind("v.wq"), bind("v.wk"), bind("v.wv")}}, bind("v.wo")};
          TransformerTowerTensors pa{{{bind("a.wq"), bind("a.wk"), bind("a.wv")}}, bind("a.wo")};
          std::vector<HeadLogitTransform> fv{{bind("fv.w"), bind("fv.b"), true}};
          std::vector<HeadLogitTransform> fa{{bind("fa.w"), bind("fa.b"), true}};
          auto [yv, ya] =
              cross_modal_transformer_layer(bind("xv"), bind("xa"), pv, pa, fv, fa, 0.4);
          return add(sum_all(mul(yv, yv)), sum_all(mul(ya, ya)));
        },
        p));
  }
  {  // cross-modal NetVLAD
    ParamMap p = random_params({{"v.c", {3, 4}}, {"v.w", {3, 4}}, {"v.b", {3}}, {"a.c", {2, 2}},
                                {"a.w", {2, 2}}, {"a.b", {2}}, {"fv.w", {2, 3}}, {"fv.b", {2}},
                                {"fa.w", {3, 2}}, {"fa.b", {3}}, {"xv", {4, 4}}, {"xa", {4, 2}}},
                               rng);
    record("cross-modal netvlad", gradient_check(
        [](Tape&, ParamBinder& bind) {
          NetVladTensors pv{bind("v.c"), bind("v.w"), bind("v.b")};
          NetVladTensors pa{bind("a.c"), bind("a.w"), bind("a.b")};
          CrossModalTransform fv{bind("fv.w"), bind("fv.b"), true};
          CrossModalTransform fa{bind("fa.w"), bind("fa.b"), true};
          auto [vv, va] = cross_modal_netvlad(bind("xv"), bind("xa"), pv, pa, fv, fa, 0.9);
          return add(sum_all(mul(vv, vv)), sum_all(mul(va, va)));
        },
        p));
  }
  {  // correlation tower
    CorrelationTower tower({3, 2, 4, 4}, 5);
    std::vector<double> f_v{0.3, -0.2, 0.8}, f_a{-0.5, 0.4};
    record("correlation tower", gradient_check(
        [&](Tape& tape, ParamBinder& bind) {
          Tensor y = tower.forward_tape(tape, bind, f_v, f_a);
          Tensor p = clamp(y, 1e-12, 1.0 - 1e-12);
          return scale(add(log_op(p), scale(log_op(sub(tape.scalar_const(1.0), p)), 2.0)), -1.0);
        },
        tower.params()));
  }
  {  // fusion heads (early + late)
    ParamMap p = random_params({{"w1", {4, 5}}, {"b1", {4}}, {"w2", {3, 4}}, {"b2", {3}},
                                {"ev", {3}}, {"ea", {2}}, {"xv", {2, 3}}, {"xa", {2, 2}}},
                               rng);
    record("fusion heads", gradient_check(
        [](Tape&, ParamBinder& bind) {
          HeadTensors head{bind("w1"), bind("b1"), bind("w2"), bind("b2")};
          Tensor a = late_fusion_head(bind("ev"), bind("ea"), head);
          Tensor fused = early_fusion(bind("xv"), bind("xa"));  // [2 x 5]
          Tensor b = classifier_head(reduce_mean(fused, 0), head);
          return add(sum_all(mul(a, a)), sum_all(mul(b, b)));
        },
        p));
  }
  const double elapsed = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "max rel err %.3e (worst: %s), %.1fs (< 1e-4, < 60s)", worst,
                worst_layer.c_str(), elapsed);
  report("gradient-correctness", worst < 1e-4 && elapsed < 60.0, buf);
}

// ---- criterion 2: cross-modal collapse --------------------------------------

void check_collapse() {
  Rng rng(2222);
  double worst = 0.0;
  int trials = 0;
  const Backbone backbones[] = {Backbone::Rnn, Backbone::Transformer, Backbone::NetVlad};
  for (int trial = 0; trial < 100; ++trial) {
    const Backbone backbone = backbones[trial % 3];
    ModelConfig late;
    late.backbone = backbone;
    late.variant = FusionVariant::Late;
    late.dim_video = 5;
    late.dim_audio = 3;
    late.frames = 4;
    late.num_labels = 6;
    late.rnn_hidden = 4;
    late.heads = 2;
    late.head_dim = 3;
    late.clusters_v = 3;
    late.clusters_a = 2;
    late.head_hidden = 5;
    ModelConfig gated = late;
    gated.variant = FusionVariant::CrossModalGated;

    MultiModalExample ex;
    ex.frames = late.frames;
    ex.dim_video = late.dim_video;
    ex.dim_audio = late.dim_audio;
    ex.true_length = late.frames;
    ex.video = randn(rng, late.frames * late.dim_video);
    ex.audio = randn(rng, late.frames * late.dim_audio);

    const std::uint64_t seed = rng.next_u64();
    ParamMap p_late = init_model_params(late, seed);
    ParamMap p_gated = init_model_params(gated, seed);

    Tape t1;
    ParamBinder b1(t1, p_late, false);
    const auto base = model_logits(t1, b1, late, ex).value();

    Tape t2;
    ParamBinder b2(t2, p_gated, false);
    const auto collapsed = model_logits(t2, b2, gated, ex, 0.0).value();

    ParamMap p_zero = p_gated;
    for (auto& [name, param] : p_zero)
      if (name.rfind("f.", 0) == 0)
        for (auto& v : param.value) v = 0.0;
    Tape t3;
    ParamBinder b3(t3, p_zero, false);
    const auto zeroed = model_logits(t3, b3, gated, ex, 1.0).value();

    for (std::size_t i = 0; i < base.size(); ++i) {
      worst = std::max(worst, std::abs(base[i] - collapsed[i]));
      worst = std::max(worst, std::abs(base[i] - zeroed[i]));
    }
    ++trials;
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), "max |delta| %.3e over %d parameterizations (<= 1e-12)", worst,
                trials);
  report("cross-modal-collapse", worst <= 1e-12, buf);
}

// ---- criteria 3+4: metric oracles and monotone invariance -------------------

using Row = std::tuple<double, std::size_t, int>;

std::vector<Row> example_top(const PredictionSet& pred, std::size_t e, std::size_t k) {
  std::vector<Row> rows;
  for (const auto& [label, score] : pred) rows.emplace_back(-score, e, label);
  std::sort(rows.begin(), rows.end());
  if (rows.size() > k) rows.resize(k);
  return rows;
}

double ref_gap(const std::vector<PredictionSet>& preds, const std::vector<LabelSet>& truths,
               std::size_t top_k) {
  std::vector<Row> pool;
  std::size_t denom = 0;
  for (std::size_t e = 0; e < preds.size(); ++e) {
    auto top = example_top(preds[e], e, top_k);
    pool.insert(pool.end(), top.begin(), top.end());
    denom += std::min(truths[e].size(), top_k);
  }
  std::sort(pool.begin(), pool.end());
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& [ns, e, label] = pool[i];
    if (truths[e].count(label)) {
      ++hits;
      ap += double(hits) / double(i + 1);
    }
  }
  return ap / double(denom);
}

double ref_map(const std::vector<PredictionSet>& preds, const std::vector<LabelSet>& truths) {
  std::set<int> labels;
  for (const auto& p : preds)
    for (const auto& [l, s] : p) labels.insert(l);
  for (const auto& t : truths) labels.insert(t.begin(), t.end());
  double total = 0.0;
  std::size_t counted = 0;
  for (int label : labels) {
    std::size_t positives = 0;
    std::vector<std::pair<double, std::size_t>> rows;
    for (std::size_t e = 0; e < preds.size(); ++e) {
      if (truths[e].count(label)) ++positives;
      auto it = preds[e].find(label);
      if (it != preds[e].end()) rows.emplace_back(-it->second, e);
    }
    if (!positives) continue;
    std::sort(rows.begin(), rows.end());
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (truths[rows[i].second].count(label)) {
        ++hits;
        ap += double(hits) / double(i + 1);
      }
    total += ap / double(positives);
    ++counted;
  }
  return total / double(counted);
}

double ref_perr(const std::vector<PredictionSet>& preds, const std::vector<LabelSet>& truths) {
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t e = 0; e < preds.size(); ++e) {
    if (truths[e].empty()) continue;
    auto top = example_top(preds[e], e, truths[e].size());
    std::size_t hits = 0;
    for (const auto& [ns, ex, label] : top) hits += truths[e].count(label);
    total += double(hits) / double(truths[e].size());
    ++counted;
  }
  return total / double(counted);
}

double ref_hit1(const std::vector<PredictionSet>& preds, const std::vector<LabelSet>& truths) {
  std::size_t hits = 0;
  for (std::size_t e = 0; e < preds.size(); ++e) {
    auto top = example_top(preds[e], e, 1);
    if (!top.empty() && truths[e].count(std::get<2>(top[0]))) ++hits;
  }
  return double(hits) / double(preds.size());
}

struct RandomCorpus {
  std::vector<PredictionSet> preds;
  std::vector<LabelSet> truths;
};

RandomCorpus random_metric_corpus(Rng& rng, bool quantize) {
  RandomCorpus c;
  const std::size_t n = 2 + rng.uniform_index(99);
  const std::size_t labels = 2 + rng.uniform_index(9);
  for (std::size_t e = 0; e < n; ++e) {
    PredictionSet p;
    LabelSet t;
    for (std::size_t l = 0; l < labels; ++l) {
      if (rng.uniform() < 0.8) {
        double s = rng.uniform();
        if (quantize) s = std::floor(s * 8.0) / 8.0;
        p[int(l)] = s;
      }
      if (rng.uniform() < 0.3) t.insert(int(l));
    }
    if (e == 0 && t.empty()) t.insert(0);
    c.preds.push_back(std::move(p));
    c.truths.push_back(std::move(t));
  }
  return c;
}

void check_metric_oracles() {
  Rng rng(3333);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    RandomCorpus c = random_metric_corpus(rng, trial % 2 == 0);
    const std::size_t top_k = 1 + rng.uniform_index(8);
    worst = std::max(worst, std::abs(global_average_precision(c.preds, c.truths, top_k) -
                                     ref_gap(c.preds, c.truths, top_k)));
    worst = std::max(worst,
                     std::abs(mean_average_precision(c.preds, c.truths) - ref_map(c.preds, c.truths)));
    worst = std::max(worst, std::abs(perr(c.preds, c.truths) - ref_perr(c.preds, c.truths)));
    worst = std::max(worst, std::abs(hit_at_1(c.preds, c.truths) - ref_hit1(c.preds, c.truths)));
  }
  char buf[100];
  std::snprintf(buf, sizeof(buf), "max |delta| %.3e over 50 corpora (< 1e-9)", worst);
  report("metric-oracle-equivalence", worst < 1e-9, buf);
}

void check_monotone_invariance() {
  Rng rng(4444);
  bool ok = true;
  for (int trial = 0; trial < 20 && ok; ++trial) {
    RandomCorpus c = random_metric_corpus(rng, trial % 2 == 0);
    std::vector<PredictionSet> cubed = c.preds;
    for (auto& p : cubed)
      for (auto& [l, s] : p) s = s * s * s;
    const std::size_t top_k = 1 + rng.uniform_index(8);
    ok = ok &&
         global_average_precision(c.preds, c.truths, top_k) ==
             global_average_precision(cubed, c.truths, top_k) &&
         mean_average_precision(c.preds, c.truths) == mean_average_precision(cubed, c.truths) &&
         perr(c.preds, c.truths) == perr(cubed, c.truths) &&
         hit_at_1(c.preds, c.truths) == hit_at_1(cubed, c.truths);
  }
  report("monotone-invariance", ok, "score -> score^3 leaves all four metrics unchanged (20 corpora)");
}

// ---- criterion 5: taxonomy properties ---------------------------------------

void check_taxonomy() {
  std::vector<std::string> lines;
  for (int c = 0; c < 8; ++c)
    for (int s = 0; s < 4; ++s)
      for (int l = 0; l < 4; ++l)
        lines.push_back("Cat" + std::to_string(c) + ":Sub" + std::to_string(s) + ":Leaf" +
                        std::to_string(l));
  Taxonomy tax = Taxonomy::from_lines(lines);
  Rng rng(5555);
  bool ok = true;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    LabelSet s;
    const std::size_t n = 1 + rng.uniform_index(8);
    for (std::size_t i = 0; i < n; ++i) s.insert(int(rng.uniform_index(tax.size())));
    const LabelSet closed = tax.expand_labels(s);
    ok = ok && tax.expand_labels(closed) == closed;  // idempotence
    LabelSet rebuilt;
    for (int level = 0; level <= tax.max_level(); ++level) {
      for (int id : tax.level_slice(closed, level)) {
        if (rebuilt.count(id)) ok = false;  // overlap
        rebuilt.insert(id);
      }
    }
    ok = ok && rebuilt == closed;  // exact cover
  }
  report("taxonomy-properties", ok, "expand_labels idempotent; level slices partition (1000 sets)");
}

// ---- criterion 6: correlation tower panel ------------------------------------

void check_correlation_panel(const Corpus& corpus) {
  double min_acc = 1.0;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    auto pairs = make_correlation_split(corpus.train, corpus.taxonomy, seed);
    CorrelationTower tower({corpus.config.dim_video, corpus.config.dim_audio, 16, 16}, seed);
    CorrelationTrainConfig cfg;  // defaults: 5 epochs
    cfg.seed = seed;
    CorrelationTrainReport rep = train_correlation_tower(tower, pairs, cfg);
    min_acc = std::min(min_acc, rep.accuracy);
  }
  char buf[100];
  std::snprintf(buf, sizeof(buf), "min accuracy %.4f over 5-seed panel, 5 epochs (>= 0.95)", min_acc);
  report("correlation-tower", min_acc >= 0.95, buf);
}

// ---- criterion 7: ordering experiment ----------------------------------------

void check_ordering(const SuiteResult& res, const SuiteConfig& suite) {
  const double advantage = res.certificate.advantage();
  const CellStats l = cell_stats(res, Backbone::Transformer, FusionVariant::Late);
  const CellStats g = cell_stats(res, Backbone::Transformer, FusionVariant::CrossModalGated);
  const CellStats c = cell_stats(res, Backbone::Transformer, FusionVariant::CrossModalConcat);
  const bool all_ran = !res.partial && l.present && g.present && c.present;
  const bool cert_ok = advantage >= 0.3;
  const bool beats_l = all_ran && c.hit1.mean < l.hit1.mean;
  const bool near_g = all_ran && c.hit1.mean <= g.hit1.mean + 0.5;
  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "Hit@1 err mean over %zu seeds: CM-C %.2f, L %.2f, CM-G %.2f; advantage %.3f "
                "(need CM-C < L, CM-C <= CM-G + 0.5pp, advantage >= 0.3)",
                suite.seeds.size(), all_ran ? c.hit1.mean : -1.0, all_ran ? l.hit1.mean : -1.0,
                all_ran ? g.hit1.mean : -1.0, advantage);
  report("ordering-experiment", all_ran && cert_ok && beats_l && near_g, buf);
}

// ---- criterion 8: suite determinism via the CLI -------------------------------

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void check_cli_determinism(const std::string& cli) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "xm_accept";
  fs::remove_all(base);
  fs::create_directories(base);
  const std::string cfg_path = (base / "suite.cfg").string();
  {
    std::ofstream cfg(cfg_path);
    cfg << "synth.num_categories = 3\nsynth.children_per_category = 1\n"
           "synth.leaves_per_child = 2\nsynth.examples_per_class = 12\n"
           "synth.frames = 16\nsynth.dim_video = 10\nsynth.dim_audio = 6\n"
           "synth.shift_delta = 4\nsynth.seed = 77\n"
           "train.max_epochs = 2\ncorr.epochs = 2\n"
           "suite.variants = L,CM-G\nsuite.seeds = 1,2\n"
           "suite.test_resamples = 2\nsuite.threads = 2\n";
  }
  bool ok = true;
  std::string detail;
  for (const char* fmt : {"text", "csv"}) {
    const std::string out1 = (base / (std::string("run1_") + fmt)).string();
    const std::string out2 = (base / (std::string("run2_") + fmt)).string();
    for (const auto& out : {out1, out2}) {
      const std::string cmd = "\"" + cli + "\" suite --config \"" + cfg_path + "\" --out-dir \"" +
                              out + "\" --format " + fmt + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        ok = false;
        detail = "CLI suite run failed";
      }
    }
    const std::string name = std::string(fmt) == "csv" ? "suite.csv" : "suite.txt";
    const std::string a = slurp(out1 + "/" + name), b = slurp(out2 + "/" + name);
    if (a.empty() || a != b) {
      ok = false;
      detail = std::string("reports differ in format ") + fmt;
    }
  }
  if (ok) detail = "two `suite` executions byte-identical (text and csv)";
  report("suite-determinism", ok, detail);
}

// ---- criterion 10: checkpoint round trip --------------------------------------

void check_checkpoint_roundtrip() {
  Checkpoint ck;
  ck.config_hash = 0xABCDEF;
  ck.epoch = 3;
  ck.best_valid_loss = 0.5;
  ck.lr = 1e-3;
  Rng rng(6666);
  ck.params["a.w"] = {{4, 3}, randn(rng, 12)};
  ck.params["b.b"] = {{5}, randn(rng, 5)};

  std::ostringstream os1(std::ios::binary);
  write_checkpoint(os1, ck);
  std::istringstream is(os1.str(), std::ios::binary);
  Checkpoint loaded = read_checkpoint(is);
  std::ostringstream os2(std::ios::binary);
  write_checkpoint(os2, loaded);
  bool ok = os1.str() == os2.str();

  std::string corrupted = os1.str();
  corrupted[1] = '?';
  std::istringstream bad(corrupted, std::ios::binary);
  bool rejected = false;
  try {
    read_checkpoint(bad);
  } catch (const DataError&) {
    rejected = true;
  }
  std::istringstream trunc(os1.str().substr(0, os1.str().size() / 2), std::ios::binary);
  bool trunc_rejected = false;
  try {
    read_checkpoint(trunc);
  } catch (const DataError&) {
    trunc_rejected = true;
  }
  ok = ok && rejected && trunc_rejected;
  report("checkpoint-roundtrip", ok,
         "save->load->save byte-identical; corrupted and truncated files rejected");
}

}  // namespace

int main(int argc, char** argv) {
  const auto t0 = std::chrono::steady_clock::now();
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <cli-binary>\n");
    return 2;
  }
  const std::string cli = argv[1];

  check_gradients();
  check_collapse();
  check_metric_oracles();
  check_monotone_invariance();
  check_taxonomy();
  check_checkpoint_roundtrip();
  check_cli_determinism(cli);

  // Shared default corpus for the two training-heavy criteria.
  SuiteConfig suite;
  suite.backbones = {Backbone::Transformer};
  suite.variants = {FusionVariant::Late, FusionVariant::CrossModalGated,
                    FusionVariant::CrossModalConcat};
  suite.seeds = {1, 2, 3, 4, 5};
  suite.threads = 4;

  Corpus corpus = generate_corpus(suite.synth);
  check_correlation_panel(corpus);

  SuiteResult res = run_experiment_suite(suite);
  check_ordering(res, suite);

  // Budget: 15 minutes of wall time on a 4-core machine = 3600 CPU-seconds.
  // Measuring CPU time (self + subprocesses) keeps the check honest on
  // machines with a different core count.
  const double elapsed = seconds_since(t0);
  rusage self{}, children{};
  getrusage(RUSAGE_SELF, &self);
  getrusage(RUSAGE_CHILDREN, &children);
  auto tv = [](const timeval& t) { return t.tv_sec + 1e-6 * t.tv_usec; };
  const double cpu = tv(self.ru_utime) + tv(self.ru_stime) + tv(children.ru_utime) +
                     tv(children.ru_stime);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.1fs CPU (< 3600s = 15min x 4 cores); %.1fs wall on %u core(s)",
                cpu, elapsed, std::thread::hardware_concurrency());
  report("runtime-budget", cpu < 3600.0, buf);

  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
