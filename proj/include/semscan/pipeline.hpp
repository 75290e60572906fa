#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "semscan/assign.hpp"
#include "semscan/contrastive.hpp"
#include "semscan/corpus.hpp"
#include "semscan/lda.hpp"
#include "semscan/random.hpp"
#include "semscan/scan.hpp"

namespace semscan {

/// Every knob of the detection pipeline. Defaults follow the published
/// settings: K = K' = 25, a 3-day window, n_max = 30, 30 baseline days,
/// alpha = 1/(K+K') and beta = 1/|V| when left unset.
struct PipelineConfig {
  std::size_t background_topics = 25;
  std::size_t foreground_topics = 25;
  std::optional<double> alpha;
  std::optional<double> beta;
  int background_sweeps = 500;
  int window_init_sweeps = 500;
  int window_refit_sweeps = 500;
  int window_days = 3;
  int baseline_days = 30;
  ScanOptions scan{};
  int assign_max_iters = 100;
  double assign_tol = 1e-6;
  int min_count = 1;
  bool contrastive = true;  // false: plain-LDA foreground topics, no refit
  unsigned threads = 1;
  std::uint64_t seed = 0;

  double combined_alpha() const {
    return alpha.value_or(1.0 / static_cast<double>(background_topics + foreground_topics));
  }

  AssignParams assign_params() const { return {combined_alpha(), assign_max_iters, assign_tol}; }

  // Days assigned per detection: the scan window plus its baseline history.
  int assignment_span() const { return baseline_days + scan.w_max; }

  // n_max capped below the location count.
  ScanOptions scan_options(std::size_t num_locations) const {
    ScanOptions o = scan;
    o.n_max = std::min<int>(o.n_max, static_cast<int>(num_locations) - 1);
    return o;
  }
};

/// Fits the K background topics on historical documents and freezes them.
inline TopicSet learn_background(std::span<const Document> background, std::size_t vocab_size,
                                 const PipelineConfig& config) {
  LdaParams p;
  p.topics = config.background_topics;
  p.beta = config.beta;
  p.sweeps = config.background_sweeps;
  p.seed = mix_seed(config.seed, 1);
  TopicSet topics = fit_lda(background, vocab_size, p).topics;
  topics.freeze_all();
  return topics;
}

struct DayDetection {
  int day = 0;
  TopicSet topics;  // K frozen + K' foreground used for this day
  std::vector<AssignedDocument> assigned;
  CountCube counts;
  BaselineCube baselines;
  std::vector<DetectionResult> ranked;  // best first

  const DetectionResult& top() const { return ranked.front(); }
};

/// One detection day: foreground topics on the window ending at `day`,
/// assignment of the window plus baseline days, cubes, and the scan.
inline DayDetection detect_day(std::span<const Document> docs, const TopicSet& background,
                               const NeighborOrder& neighbors, const PipelineConfig& config, int day,
                               std::size_t ranked_limit = 1) {
  if (config.window_days < 1) throw ConfigError("window_days must be >= 1");
  std::vector<Document> window;
  for (const auto& d : docs)
    if (d.day > day - config.window_days && d.day <= day) window.push_back(d);
  if (window.empty()) throw DataError("no foreground documents in the window ending on day " + std::to_string(day));

  DetectionWindowParams wp;
  wp.foreground_topics = config.foreground_topics;
  wp.alpha = config.alpha;
  wp.beta = config.beta;
  wp.init_sweeps = config.window_init_sweeps;
  wp.refit_sweeps = config.window_refit_sweeps;
  wp.seed = mix_seed(config.seed, 2, static_cast<std::uint64_t>(static_cast<std::int64_t>(day)));

  DayDetection out;
  out.day = day;
  if (config.contrastive) {
    out.topics = fit_detection_window(window, background, wp).combined;
  } else {
    LdaParams lda;
    lda.topics = wp.foreground_topics;
    lda.beta = wp.beta;
    lda.sweeps = wp.init_sweeps;
    lda.seed = mix_seed(wp.seed, 0);
    out.topics = combine_topics(background, fit_lda(window, background.vocab_size(), lda).topics);
  }

  const int span = config.assignment_span();
  out.assigned = assign_corpus_window(docs, out.topics, day, span, config.assign_params(), config.threads);
  const std::size_t K = background.num_topics();
  out.counts = build_count_cube(out.assigned, K, config.foreground_topics, neighbors.size(), day - span + 1, day);
  out.baselines = build_baseline_cube(out.counts, config.baseline_days);
  out.ranked = scan_all(out.counts, out.baselines, neighbors, config.scan_options(neighbors.size()), day,
                        std::max<std::size_t>(ranked_limit, 1), config.threads);
  return out;
}

}  // namespace semscan
