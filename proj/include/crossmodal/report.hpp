#ifndef CROSSMODAL_REPORT_HPP
#define CROSSMODAL_REPORT_HPP

#include <cstdio>
#include <string>
#include <vector>

#include "crossmodal/metrics.hpp"
#include "crossmodal/train.hpp"

namespace crossmodal {

enum class ReportFormat { Text, Csv };

inline ReportFormat parse_format(const std::string& s) {
  if (s == "text") return ReportFormat::Text;
  if (s == "csv") return ReportFormat::Csv;
  throw ConfigError("unknown report format '" + s + "' (expected text or csv)");
}

namespace report_detail {

inline std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  while (s.size() < width) s.push_back(' ');
  return s;
}

inline std::string scope_cells(const MetricsScope& s, ReportFormat f) {
  if (!s.defined) return f == ReportFormat::Csv ? ",,,," : "  (undefined)";
  const char* sep = f == ReportFormat::Csv ? "," : "  ";
  std::string out;
  for (double v : {s.gap_err(), s.map_err(), s.perr_err(), s.hit1_err()})
    out += sep + fmt(v);
  out += sep + std::to_string(s.examples);
  return out;
}

}  // namespace report_detail

// One evaluation: overall, per-level, and per-top-level-category error rates
// (100 * (1 - metric)), matching the error-rate convention of the tables.
inline std::string render_metrics_report(const MetricsReport& rep, ReportFormat f) {
  using report_detail::fmt;
  using report_detail::pad;
  std::string out;
  if (f == ReportFormat::Csv) {
    out += "scope,gap_err,map_err,perr_err,hit1_err,examples\n";
    out += "overall" + report_detail::scope_cells(rep.overall, f) + "\n";
    for (std::size_t l = 0; l < rep.levels.size(); ++l)
      out += "level" + std::to_string(l) + report_detail::scope_cells(rep.levels[l], f) + "\n";
    for (const auto& [name, scope] : rep.categories)
      out += name + report_detail::scope_cells(scope, f) + "\n";
    return out;
  }
  const std::size_t w = 14;
  out += "error rates (100 * (1 - metric)), top_k=" + std::to_string(rep.top_k) + "\n";
  out += pad("scope", w) + pad("GAP", 10) + pad("MAP", 10) + pad("PERR", 10) + pad("Hit@1", 10) +
         "examples\n";
  auto row = [&](const std::string& name, const MetricsScope& s) {
    out += pad(name, w);
    if (!s.defined) {
      out += "(undefined)\n";
      return;
    }
    for (double v : {s.gap_err(), s.map_err(), s.perr_err(), s.hit1_err()}) out += pad(fmt(v), 10);
    out += std::to_string(s.examples) + "\n";
  };
  row("overall", rep.overall);
  for (std::size_t l = 0; l < rep.levels.size(); ++l)
    row("level " + std::to_string(l), rep.levels[l]);
  for (const auto& [name, scope] : rep.categories) row(name, scope);
  return out;
}

// Comparison table: one block per backbone, one row per metric, one column
// per variant (mean +/- std of error over seeds) with the delta against the
// L baseline (L_error - variant_error; positive means better than L).
inline std::string render_suite(const SuiteResult& res, ReportFormat f) {
  using report_detail::fmt;
  using report_detail::pad;
  std::string out;
  const auto& cfg = res.config;

  if (f == ReportFormat::Csv) {
    out += "backbone,variant,metric,err_mean,err_std,delta_vs_L,seeds\n";
    for (Backbone b : cfg.backbones) {
      const CellStats base = cell_stats(res, b, FusionVariant::Late);
      for (FusionVariant v : cfg.variants) {
        const CellStats c = cell_stats(res, b, v);
        if (!c.present) continue;
        auto row = [&](const char* metric, const MetricStats& m, const MetricStats& l) {
          out += to_string(b) + "," + to_string(v) + "," + metric + "," + fmt(m.mean) + "," +
                 fmt(m.stddev) + ",";
          if (base.present && v != FusionVariant::Late) out += fmt(l.mean - m.mean);
          out += "," + std::to_string(cfg.seeds.size()) + "\n";
        };
        row("gap_err", c.gap, base.gap);
        row("map_err", c.map, base.map);
        row("perr_err", c.perr, base.perr);
        row("hit1_err", c.hit1, base.hit1);
      }
    }
    if (res.partial) {
      out += "# PARTIAL RESULTS: failed runs below\n";
      for (const auto& r : res.runs)
        if (!r.ok) out += "# " + r.key.str() + ": " + r.error + "\n";
    }
    return out;
  }

  out += "experiment suite: error rates, mean +/- std over " +
         std::to_string(cfg.seeds.size()) + " seeds, " +
         std::to_string(cfg.test_resamples) + " test resamples per seed\n";
  out += "corpus: joint-oracle advantage " + fmt(res.certificate.advantage(), 3) +
         " (single " + fmt(res.certificate.single_modality_hit1, 3) + ", joint " +
         fmt(res.certificate.joint_alignment_hit1, 3) + ")\n";
  out += "correlation tower: accuracy " + fmt(res.corr_report.accuracy, 4) + ", fpr " +
         fmt(res.corr_report.fpr, 4) + ", fnr " + fmt(res.corr_report.fnr, 4) + "\n";
  for (Backbone b : cfg.backbones) {
    out += "\n== " + to_string(b) + " ==\n";
    const CellStats base = cell_stats(res, b, FusionVariant::Late);
    out += pad("metric", 10);
    for (FusionVariant v : cfg.variants) out += pad(to_string(v), 26);
    out += "\n";
    auto metric_row = [&](const char* name, MetricStats CellStats::*m) {
      out += pad(name, 10);
      for (FusionVariant v : cfg.variants) {
        const CellStats c = cell_stats(res, b, v);
        if (!c.present) {
          out += pad("(failed)", 26);
          continue;
        }
        std::string cell = fmt((c.*m).mean, 2) + " +/- " + fmt((c.*m).stddev, 2);
        if (base.present && v != FusionVariant::Late)
          cell += " (" + fmt((base.*m).mean - (c.*m).mean, 2) + ")";
        out += pad(cell, 26);
      }
      out += "\n";
    };
    metric_row("GAP", &CellStats::gap);
    metric_row("MAP", &CellStats::map);
    metric_row("PERR", &CellStats::perr);
    metric_row("Hit@1", &CellStats::hit1);
  }
  if (res.partial) {
    out += "\nPARTIAL RESULTS: some runs failed\n";
    for (const auto& r : res.runs)
      if (!r.ok) out += "  " + r.key.str() + ": " + r.error + "\n";
  }
  return out;
}

}  // namespace crossmodal

#endif
