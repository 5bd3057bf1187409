#ifndef CROSSMODAL_DATA_SYNTH_HPP
#define CROSSMODAL_DATA_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "crossmodal/correlation.hpp"
#include "crossmodal/errors.hpp"
#include "crossmodal/example.hpp"
#include "crossmodal/optim.hpp"
#include "crossmodal/taxonomy.hpp"

namespace crossmodal {

// Desk-scale defaults: the full experiment suite stays within CPU-minutes.
struct SynthConfig {
  std::size_t num_categories = 8;
  std::size_t children_per_category = 2;
  std::size_t leaves_per_child = 2;  // leaves pair across adjacent categories
  std::size_t examples_per_class = 200;
  std::size_t frames = 30;
  std::size_t dim_video = 32;
  std::size_t dim_audio = 8;
  double fraction_uncorrelated = 0.25;
  double noise_sigma = 0.3;
  std::uint64_t seed = 7;
  // perturbs only the per-example draws (noise, shuffles, audio swaps), not
  // the signal bank, so corpora with the same seed but different salts are
  // fresh samples of the same task
  std::uint64_t example_salt = 0;

  // signal geometry
  std::size_t bump_width = 4;
  std::size_t shift_delta = 6;  // leaf identity is encoded in this audio shift
  double bump_amp = 10.0;
  double theme_amp = 2.0;

  double train_fraction = 0.70;
  double valid_fraction = 0.15;
};

// Oracle accuracies emitted with the corpus, proving the cross-modal signal
// exists: the label of a leaf is recoverable from the temporal alignment of
// the two modalities but not from either modality alone.
struct SeparabilityCertificate {
  double single_modality_hit1 = 0.0;  // video-only nearest prototype
  double joint_alignment_hit1 = 0.0;
  double advantage() const { return joint_alignment_hit1 - single_modality_hit1; }
};

struct Corpus {
  SynthConfig config;
  Taxonomy taxonomy;
  std::vector<MultiModalExample> train, valid, test;
  SeparabilityCertificate certificate;

  std::vector<const MultiModalExample*> all() const {
    std::vector<const MultiModalExample*> out;
    for (const auto& e : train) out.push_back(&e);
    for (const auto& e : valid) out.push_back(&e);
    for (const auto& e : test) out.push_back(&e);
    return out;
  }
};

// Zero rows appended up to `frames`. The upstream pipeline truncates long
// sequences before this point, so t > frames is an explicit error.
inline std::vector<double> pad_frames(const std::vector<double>& x, std::size_t t,
                                      std::size_t dim, std::size_t frames) {
  if (x.size() != t * dim) throw DimensionError("pad_frames: buffer size mismatch");
  if (t > frames)
    throw DataError("pad_frames: sequence length " + std::to_string(t) +
                    " exceeds frame budget " + std::to_string(frames));
  std::vector<double> out(frames * dim, 0.0);
  std::copy(x.begin(), x.end(), out.begin());
  return out;
}

namespace synth_detail {

inline std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(std::max(norm, 1e-12));
  for (auto& x : v) x /= norm;
  return v;
}

// Everything the generator and the oracles need about one leaf class.
struct LeafSignal {
  int leaf_id;
  int pair_index;      // index into pair direction tables
  int member;          // 0 or 1 within the pair
  int category_index;  // top-level index
};

struct SignalBank {
  std::vector<std::vector<double>> pair_video_dir;  // per pair, R^dv
  std::vector<std::vector<double>> pair_audio_dir;  // per pair, R^da
  std::vector<std::vector<double>> pair_theme;      // per pair, R^da
  std::vector<LeafSignal> leaves;                   // indexed by class order
};

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Matched-filter onset estimate for one direction over the frame matrix.
inline std::pair<std::size_t, double> best_onset(const std::vector<double>& frames,
                                                 std::size_t t_total, std::size_t dim,
                                                 const std::vector<double>& dir,
                                                 std::size_t width) {
  std::size_t best_t = 0;
  double best_v = -1e300;
  for (std::size_t t0 = 0; t0 + width <= t_total; ++t0) {
    double v = 0.0;
    for (std::size_t t = t0; t < t0 + width; ++t) v += dot(&frames[t * dim], dir.data(), dim);
    if (v > best_v) {
      best_v = v;
      best_t = t0;
    }
  }
  return {best_t, best_v};
}

}  // namespace synth_detail

// Video-only nearest-prototype classifier. Alignment-coded leaf pairs share a
// video prototype, so the tie resolves to the pair's first member.
inline int video_only_oracle_predict(const MultiModalExample& ex,
                                          const synth_detail::SignalBank& bank,
                                          const SynthConfig& cfg) {
  std::size_t best_pair = 0;
  double best = -1e300;
  for (std::size_t p = 0; p < bank.pair_video_dir.size(); ++p) {
    auto [t0, v] = synth_detail::best_onset(ex.video, ex.true_length, ex.dim_video,
                                            bank.pair_video_dir[p], cfg.bump_width);
    if (v > best) {
      best = v;
      best_pair = p;
    }
  }
  for (const auto& leaf : bank.leaves)
    if (leaf.pair_index == static_cast<int>(best_pair) && leaf.member == 0) return leaf.leaf_id;
  return bank.leaves.front().leaf_id;
}

// Audio-only nearest-prototype classifier: the pair is recoverable from the
// audio prototype, but the member is not (the bump shift is only meaningful
// relative to the video onset), so the tie again resolves to member 0.
inline int audio_only_oracle_predict(const MultiModalExample& ex,
                                     const synth_detail::SignalBank& bank,
                                     const SynthConfig& cfg) {
  std::size_t best_pair = 0;
  double best = -1e300;
  for (std::size_t p = 0; p < bank.pair_audio_dir.size(); ++p) {
    auto [t0, v] = synth_detail::best_onset(ex.audio, ex.true_length, ex.dim_audio,
                                            bank.pair_audio_dir[p], cfg.bump_width);
    if (v > best) {
      best = v;
      best_pair = p;
    }
  }
  for (const auto& leaf : bank.leaves)
    if (leaf.pair_index == static_cast<int>(best_pair) && leaf.member == 0) return leaf.leaf_id;
  return bank.leaves.front().leaf_id;
}

// Joint oracle: pair from the video filter, member from the estimated
// video/audio onset shift.
inline int joint_alignment_oracle_predict(const MultiModalExample& ex,
                                          const synth_detail::SignalBank& bank,
                                          const SynthConfig& cfg) {
  std::size_t best_pair = 0;
  double best = -1e300;
  std::size_t t_v = 0;
  for (std::size_t p = 0; p < bank.pair_video_dir.size(); ++p) {
    auto [t0, v] = synth_detail::best_onset(ex.video, ex.true_length, ex.dim_video,
                                            bank.pair_video_dir[p], cfg.bump_width);
    if (v > best) {
      best = v;
      best_pair = p;
      t_v = t0;
    }
  }
  auto [t_a, va] = synth_detail::best_onset(ex.audio, ex.true_length, ex.dim_audio,
                                            bank.pair_audio_dir[best_pair], cfg.bump_width);
  const double shift = static_cast<double>(t_a) - static_cast<double>(t_v);
  const double d0 = std::abs(shift);
  const double d1 = std::abs(shift - static_cast<double>(cfg.shift_delta));
  const int member = d0 <= d1 ? 0 : 1;
  for (const auto& leaf : bank.leaves)
    if (leaf.pair_index == static_cast<int>(best_pair) && leaf.member == member)
      return leaf.leaf_id;
  return bank.leaves.front().leaf_id;
}

namespace synth_detail {

inline void validate(const SynthConfig& c) {
  if (c.num_categories == 0 || c.children_per_category == 0 || c.leaves_per_child == 0 ||
      c.examples_per_class == 0 || c.frames == 0 || c.dim_video == 0 || c.dim_audio == 0)
    throw ConfigError("generate_corpus: all counts must be positive");
  if (c.leaves_per_child != 2)
    throw ConfigError("generate_corpus: alignment coding requires exactly 2 leaves per child");
  if (!(c.fraction_uncorrelated >= 0.0 && c.fraction_uncorrelated <= 1.0))
    throw ConfigError("generate_corpus: fraction_uncorrelated must lie in [0,1]");
  if (c.fraction_uncorrelated > 0.0 && c.num_categories < 2)
    throw ConfigError("generate_corpus: uncorrelated audio needs >= 2 top-level categories");
  if (c.noise_sigma < 0.0) throw ConfigError("generate_corpus: noise_sigma must be >= 0");
  const std::size_t pairs = c.num_categories * c.children_per_category;
  if (pairs > 4 * c.dim_video || c.num_categories > 4 * c.dim_audio)
    throw ConfigError("generate_corpus: more classes than prototype capacity for these dims");
  if (c.frames < c.bump_width + c.shift_delta + 2)
    throw ConfigError("generate_corpus: frame budget too small for the alignment signal");
  if (c.train_fraction + c.valid_fraction >= 1.0)
    throw ConfigError("generate_corpus: train/valid fractions must leave room for test");
}

// Human-readable top-level names; indices past the known set fall back to a
// generic label.
inline std::string category_name(std::size_t i) {
  static const char* known[] = {"Electronics", "Sports", "Movie", "Art",
                                "Transport",   "Food",   "Games", "Travel"};
  if (i < 8) return known[i];
  return "Category" + std::to_string(i);
}

struct GenParams {
  std::size_t onset;
  std::size_t true_length;
};

inline GenParams draw_gen_params(Rng& rng, const SynthConfig& c) {
  GenParams g;
  const std::size_t min_len = std::max<std::size_t>(c.bump_width + c.shift_delta + 1,
                                                    c.frames > 6 ? c.frames - 6 : c.frames);
  g.true_length = min_len + rng.uniform_index(c.frames - min_len + 1);
  const std::size_t max_onset = g.true_length - c.bump_width - c.shift_delta;
  g.onset = rng.uniform_index(max_onset + 1);
  return g;
}

inline void fill_video(std::vector<double>& video, const SynthConfig& c, Rng& rng,
                       const std::vector<double>& dir, const GenParams& g) {
  video.assign(c.frames * c.dim_video, 0.0);
  for (std::size_t t = 0; t < g.true_length; ++t)
    for (std::size_t d = 0; d < c.dim_video; ++d)
      video[t * c.dim_video + d] = c.noise_sigma > 0 ? rng.normal(0.0, c.noise_sigma) : 0.0;
  for (std::size_t t = g.onset; t < g.onset + c.bump_width; ++t)
    for (std::size_t d = 0; d < c.dim_video; ++d)
      video[t * c.dim_video + d] += c.bump_amp * dir[d];
}

inline void fill_audio(std::vector<double>& audio, const SynthConfig& c, Rng& rng,
                       const std::vector<double>& pair_dir, const std::vector<double>& theme,
                       const GenParams& g, std::size_t shift) {
  audio.assign(c.frames * c.dim_audio, 0.0);
  for (std::size_t t = 0; t < g.true_length; ++t)
    for (std::size_t d = 0; d < c.dim_audio; ++d)
      audio[t * c.dim_audio + d] =
          (c.noise_sigma > 0 ? rng.normal(0.0, c.noise_sigma) : 0.0) + c.theme_amp * theme[d];
  for (std::size_t t = g.onset + shift; t < g.onset + shift + c.bump_width; ++t)
    for (std::size_t d = 0; d < c.dim_audio; ++d)
      audio[t * c.dim_audio + d] += c.bump_amp * pair_dir[d];
}

}  // namespace synth_detail

// Deterministic synthetic multi-modal corpus. Leaves pair across adjacent
// top-level categories; the two members of a pair share video and audio
// prototype directions (and audio theme) and differ only in the time shift
// between the video and audio activity bumps. The full label path --
// category, child, leaf -- is therefore recoverable from cross-modal
// alignment but ambiguous within either modality alone. A fraction of
// examples get audio from an unrelated class (correlated=false) while
// keeping their video-derived labels.
inline Corpus generate_corpus(const SynthConfig& cfg) {
  synth_detail::validate(cfg);
  Corpus corpus;
  corpus.config = cfg;

  synth_detail::SignalBank bank;
  Rng dir_rng(cfg.seed ^ 0x5157AB1E5EEDull);
  const std::size_t n_pairs = cfg.num_categories * cfg.children_per_category;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    bank.pair_video_dir.push_back(synth_detail::random_unit(dir_rng, cfg.dim_video));
    bank.pair_audio_dir.push_back(synth_detail::random_unit(dir_rng, cfg.dim_audio));
    bank.pair_theme.push_back(synth_detail::random_unit(dir_rng, cfg.dim_audio));
  }

  // Pairing spans adjacent top-level categories: member 0 of pair (c, j) is
  // leaf 0 of (category c, child j); member 1 is leaf 1 of (category c+1,
  // child j). The entire label path -- category included -- therefore hinges
  // on the video/audio bump alignment, never on either modality alone.
  Taxonomy tax;
  for (std::size_t c = 0; c < cfg.num_categories; ++c) {
    const std::string cat = synth_detail::category_name(c);
    tax.add_path(cat);
    for (std::size_t j = 0; j < cfg.children_per_category; ++j) {
      const std::string child = cat + ":Sub" + std::to_string(j);
      for (std::size_t k = 0; k < cfg.leaves_per_child; ++k) {
        const int leaf = tax.add_path(child + ":Leaf" + std::to_string(k));
        const std::size_t pair_cat = k == 0 ? c : (c + cfg.num_categories - 1) % cfg.num_categories;
        bank.leaves.push_back({leaf,
                               static_cast<int>(pair_cat * cfg.children_per_category + j),
                               static_cast<int>(k), static_cast<int>(c)});
      }
    }
  }
  corpus.taxonomy = tax;

  Rng rng(cfg.seed ^ (cfg.example_salt * 0x2545F4914F6CDD1Dull));
  std::uint64_t next_id = 0;
  std::vector<MultiModalExample> test_pool;
  for (const auto& leaf : bank.leaves) {
    const std::size_t n = cfg.examples_per_class;
    const std::size_t n_train = static_cast<std::size_t>(cfg.train_fraction * n);
    const std::size_t n_valid = static_cast<std::size_t>(cfg.valid_fraction * n);
    for (std::size_t i = 0; i < n; ++i) {
      MultiModalExample ex;
      ex.id = next_id++;
      ex.frames = cfg.frames;
      ex.dim_video = cfg.dim_video;
      ex.dim_audio = cfg.dim_audio;
      auto gp = synth_detail::draw_gen_params(rng, cfg);
      ex.true_length = gp.true_length;
      synth_detail::fill_video(ex.video, cfg, rng, bank.pair_video_dir[leaf.pair_index], gp);
      const std::size_t shift = leaf.member == 0 ? 0 : cfg.shift_delta;
      ex.correlated = rng.uniform() >= cfg.fraction_uncorrelated;
      if (ex.correlated) {
        synth_detail::fill_audio(ex.audio, cfg, rng, bank.pair_audio_dir[leaf.pair_index],
                                 bank.pair_theme[leaf.pair_index], gp, shift);
      } else {
        // Audio from an unrelated class: different top-level category and a
        // different pair (the pair partner's audio would be a disguised
        // correlated track, not an unrelated one).
        std::size_t other;
        do {
          other = rng.uniform_index(bank.leaves.size());
        } while (bank.leaves[other].category_index == leaf.category_index ||
                 bank.leaves[other].pair_index == leaf.pair_index);
        const auto& foreign = bank.leaves[other];
        auto gp2 = synth_detail::draw_gen_params(rng, cfg);
        gp2.true_length = gp.true_length;  // lengths stay paired
        if (gp2.onset + cfg.bump_width + cfg.shift_delta > gp2.true_length)
          gp2.onset = 0;
        synth_detail::fill_audio(ex.audio, cfg, rng, bank.pair_audio_dir[foreign.pair_index],
                                 bank.pair_theme[foreign.pair_index], gp2,
                                 foreign.member == 0 ? 0 : cfg.shift_delta);
      }
      ex.labels = tax.expand_labels({leaf.leaf_id});
      if (i < n_train)
        corpus.train.push_back(std::move(ex));
      else if (i < n_train + n_valid)
        corpus.valid.push_back(std::move(ex));
      else
        corpus.test.push_back(std::move(ex));
    }
  }

  // Separability certificate over the test split: the single-modality figure
  // is the better of the video-only and audio-only prototype oracles.
  std::size_t video_hits = 0, audio_hits = 0, joint_hits = 0;
  for (const auto& ex : corpus.test) {
    if (ex.labels.count(video_only_oracle_predict(ex, bank, cfg))) ++video_hits;
    if (ex.labels.count(audio_only_oracle_predict(ex, bank, cfg))) ++audio_hits;
    if (ex.labels.count(joint_alignment_oracle_predict(ex, bank, cfg))) ++joint_hits;
  }
  const double n_test = static_cast<double>(corpus.test.size());
  corpus.certificate.single_modality_hit1 =
      static_cast<double>(std::max(video_hits, audio_hits)) / n_test;
  corpus.certificate.joint_alignment_hit1 = joint_hits / n_test;
  return corpus;
}

// Positive pairs are same-video (correlated) examples; negatives cross
// categories via make_negative_pairs. Balanced 1:1 by default.
inline std::vector<CorrelationExample> make_correlation_split(
    const std::vector<MultiModalExample>& examples, const Taxonomy& taxonomy, std::uint64_t seed,
    double negative_ratio = 1.0) {
  std::vector<CorrelationExample> out;
  for (const auto& ex : examples) {
    if (!ex.correlated) continue;
    CorrelationExample pos;
    pos.f_v = pool_modality(ex.video, ex.frames, ex.dim_video, ex.true_length);
    pos.f_a = pool_modality(ex.audio, ex.frames, ex.dim_audio, ex.true_length);
    pos.y = 1;
    out.push_back(std::move(pos));
  }
  const std::size_t n_pos = out.size();
  auto negatives = make_negative_pairs(examples, taxonomy, seed);
  const std::size_t n_neg = std::min(
      negatives.size(), static_cast<std::size_t>(negative_ratio * static_cast<double>(n_pos)));
  out.insert(out.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(n_neg));
  return out;
}

// Human-readable dump for debugging.
inline void dump_corpus_text(std::ostream& os, const Corpus& corpus,
                             std::size_t max_examples = 10) {
  os << "corpus: " << corpus.train.size() << " train, " << corpus.valid.size() << " valid, "
     << corpus.test.size() << " test; frames=" << corpus.config.frames
     << " dv=" << corpus.config.dim_video << " da=" << corpus.config.dim_audio << "\n";
  os << "certificate: single=" << corpus.certificate.single_modality_hit1
     << " joint=" << corpus.certificate.joint_alignment_hit1 << "\n";
  std::size_t shown = 0;
  for (const auto& ex : corpus.train) {
    if (shown++ >= max_examples) break;
    os << "example " << ex.id << " len=" << ex.true_length
       << " correlated=" << (ex.correlated ? 1 : 0) << " labels=";
    for (int l : ex.labels) os << corpus.taxonomy.node(l).full_path << " ";
    os << "\n";
  }
}

}  // namespace crossmodal

#endif
