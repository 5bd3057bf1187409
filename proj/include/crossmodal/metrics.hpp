#ifndef CROSSMODAL_METRICS_HPP
#define CROSSMODAL_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "crossmodal/errors.hpp"
#include "crossmodal/taxonomy.hpp"

namespace crossmodal {

// Per-example map label id -> score in [0,1].
using PredictionSet = std::map<int, double>;

namespace metrics_detail {

struct Scored {
  double score;
  std::size_t example;
  int label;
};

// Score ties are broken by ascending label id everywhere; pooled rankings
// additionally break by example index. Determinism over statistical nicety.
inline bool rank_less(const Scored& a, const Scored& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.example != b.example) return a.example < b.example;
  return a.label < b.label;
}

inline std::vector<Scored> top_k_of(const PredictionSet& pred, std::size_t example,
                                    std::size_t top_k) {
  std::vector<Scored> items;
  items.reserve(pred.size());
  for (const auto& [label, score] : pred) items.push_back({score, example, label});
  std::sort(items.begin(), items.end(), rank_less);
  if (items.size() > top_k) items.resize(top_k);
  return items;
}

}  // namespace metrics_detail

// Average precision of the globally pooled, score-ranked top-k predictions.
// Recall is denominated by the total ground-truth positives, capped per
// example at top_k.
inline double global_average_precision(const std::vector<PredictionSet>& preds,
                                       const std::vector<LabelSet>& truths,
                                       std::size_t top_k = 20) {
  if (preds.size() != truths.size())
    throw DimensionError("global_average_precision: list length mismatch");
  if (top_k < 1) throw ConfigError("global_average_precision: top_k must be >= 1");
  using metrics_detail::Scored;
  std::vector<Scored> pool;
  std::size_t denom = 0;
  for (std::size_t e = 0; e < preds.size(); ++e) {
    auto items = metrics_detail::top_k_of(preds[e], e, top_k);
    pool.insert(pool.end(), items.begin(), items.end());
    denom += std::min(truths[e].size(), top_k);
  }
  if (denom == 0)
    throw UndefinedMetricError("global_average_precision: no ground-truth positives");
  std::sort(pool.begin(), pool.end(), metrics_detail::rank_less);
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (truths[pool[i].example].count(pool[i].label)) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return ap / static_cast<double>(denom);
}

// Per-label average precision across examples, averaged over labels that
// have at least one positive. Positives never scored by any example still
// count in the label's recall denominator.
inline double mean_average_precision(const std::vector<PredictionSet>& preds,
                                     const std::vector<LabelSet>& truths) {
  if (preds.size() != truths.size())
    throw DimensionError("mean_average_precision: list length mismatch");
  std::set<int> labels;
  for (const auto& p : preds)
    for (const auto& [l, s] : p) labels.insert(l);
  for (const auto& t : truths) labels.insert(t.begin(), t.end());
  double sum_ap = 0.0;
  std::size_t n_labels = 0;
  for (int label : labels) {
    std::size_t positives = 0;
    std::vector<std::pair<double, std::size_t>> ranked;  // (score, example)
    for (std::size_t e = 0; e < preds.size(); ++e) {
      if (truths[e].count(label)) ++positives;
      auto it = preds[e].find(label);
      if (it != preds[e].end()) ranked.emplace_back(it->second, e);
    }
    if (positives == 0) continue;
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (truths[ranked[i].second].count(label)) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(i + 1);
      }
    }
    sum_ap += ap / static_cast<double>(positives);
    ++n_labels;
  }
  if (n_labels == 0) throw UndefinedMetricError("mean_average_precision: no label has positives");
  return sum_ap / static_cast<double>(n_labels);
}

// Mean precision among each example's top-g predictions, g = its truth count.
// Examples with empty truth are skipped.
inline double perr(const std::vector<PredictionSet>& preds, const std::vector<LabelSet>& truths) {
  if (preds.size() != truths.size()) throw DimensionError("perr: list length mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t e = 0; e < preds.size(); ++e) {
    const std::size_t g = truths[e].size();
    if (g == 0) continue;
    auto top = metrics_detail::top_k_of(preds[e], e, g);
    std::size_t hits = 0;
    for (const auto& it : top) hits += truths[e].count(it.label) ? 1 : 0;
    sum += static_cast<double>(hits) / static_cast<double>(g);
    ++n;
  }
  if (n == 0) throw UndefinedMetricError("perr: every example has empty truth");
  return sum / static_cast<double>(n);
}

// Fraction of examples whose single top-scored label is in the ground truth.
inline double hit_at_1(const std::vector<PredictionSet>& preds,
                       const std::vector<LabelSet>& truths) {
  if (preds.size() != truths.size()) throw DimensionError("hit_at_1: list length mismatch");
  if (preds.empty()) throw UndefinedMetricError("hit_at_1: no examples");
  double hits = 0.0;
  for (std::size_t e = 0; e < preds.size(); ++e) {
    auto top = metrics_detail::top_k_of(preds[e], e, 1);
    if (!top.empty() && truths[e].count(top[0].label)) hits += 1.0;
  }
  return hits / static_cast<double>(preds.size());
}

inline double error_rate(double metric) { return 100.0 * (1.0 - metric); }

// One evaluated scope (overall, a hierarchy level, or a top-level category).
struct MetricsScope {
  bool defined = false;
  double gap = 0.0, map = 0.0, perr = 0.0, hit1 = 0.0;
  std::size_t examples = 0;

  double gap_err() const { return error_rate(gap); }
  double map_err() const { return error_rate(map); }
  double perr_err() const { return error_rate(perr); }
  double hit1_err() const { return error_rate(hit1); }
};

struct MetricsReport {
  MetricsScope overall;
  std::vector<MetricsScope> levels;           // index = level
  std::map<std::string, MetricsScope> categories;  // keyed by root path for stable order
  std::size_t top_k = 20;
};

namespace metrics_detail {

inline MetricsScope compute_scope(const std::vector<PredictionSet>& preds,
                                  const std::vector<LabelSet>& truths, std::size_t top_k) {
  MetricsScope s;
  s.examples = preds.size();
  if (preds.empty()) return s;
  try {
    s.gap = global_average_precision(preds, truths, top_k);
    s.map = mean_average_precision(preds, truths);
    s.perr = perr(preds, truths);
    s.hit1 = hit_at_1(preds, truths);
    s.defined = true;
  } catch (const UndefinedMetricError&) {
    s.defined = false;
  }
  return s;
}

}  // namespace metrics_detail

// Per-level and per-category report. Predictions at a level/category are the
// example's global top-k predictions restricted to that slice; examples with
// neither a sliced prediction nor sliced ground truth are discarded for that
// scope. Everything is computed from one prediction set -- no re-inference.
inline MetricsReport assemble_report(const std::vector<PredictionSet>& preds,
                                     const std::vector<LabelSet>& truths,
                                     const Taxonomy& taxonomy, std::size_t top_k = 20) {
  if (preds.size() != truths.size()) throw DimensionError("assemble_report: length mismatch");
  MetricsReport report;
  report.top_k = top_k;
  report.overall = metrics_detail::compute_scope(preds, truths, top_k);

  // Global top-k restriction shared by all sliced scopes.
  std::vector<PredictionSet> topk_preds(preds.size());
  for (std::size_t e = 0; e < preds.size(); ++e)
    for (const auto& it : metrics_detail::top_k_of(preds[e], e, top_k))
      topk_preds[e][it.label] = it.score;

  auto sliced_scope = [&](auto slice_pred, auto slice_truth) {
    std::vector<PredictionSet> ps;
    std::vector<LabelSet> ts;
    for (std::size_t e = 0; e < preds.size(); ++e) {
      PredictionSet p;
      for (const auto& [label, score] : topk_preds[e])
        if (slice_pred(label)) p[label] = score;
      LabelSet t = slice_truth(truths[e]);
      if (p.empty() && t.empty()) continue;  // discard rule
      ps.push_back(std::move(p));
      ts.push_back(std::move(t));
    }
    return metrics_detail::compute_scope(ps, ts, top_k);
  };

  const int max_report_level = Taxonomy::kMaxLevels - 1;
  for (int l = 0; l <= max_report_level; ++l) {
    if (l <= taxonomy.max_level()) {
      report.levels.push_back(sliced_scope(
          [&](int label) { return taxonomy.level_of(label) == l; },
          [&](const LabelSet& t) { return taxonomy.level_slice(t, l); }));
    } else {
      report.levels.push_back(MetricsScope{});
    }
  }
  for (int root : taxonomy.roots()) {
    report.categories[taxonomy.node(root).full_path] = sliced_scope(
        [&](int label) { return taxonomy.top_level_of(label) == root; },
        [&](const LabelSet& t) { return taxonomy.subtree_slice(t, root); });
  }
  return report;
}

}  // namespace crossmodal

#endif
