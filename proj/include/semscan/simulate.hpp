#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "semscan/corpus.hpp"
#include "semscan/error.hpp"
#include "semscan/lda.hpp"
#include "semscan/pipeline.hpp"
#include "semscan/random.hpp"
#include "semscan/scan.hpp"

namespace semscan {

/// A spatially localized event whose expected size grows linearly: on
/// event day d (1-based) the injected count is Poisson(slope * d).
struct InjectionSpec {
  std::string label;
  int start_day = 0;
  int duration_days = 30;
  int center_location = 0;
  int region_size = 30;
  double slope = 20.0;
  std::uint64_t seed = 0;
};

struct Partition {
  std::vector<Record> background;
  std::vector<Record> foreground;
  std::vector<Record> heldout;
};

/// Removes every record carrying `label` from both partitions. Records
/// before `background_end_day` are background, the rest foreground.
inline Partition hold_out_category(std::span<const Record> records, const std::string& label,
                                   int background_end_day) {
  Partition p;
  for (const auto& r : records) {
    if (r.label && *r.label == label)
      p.heldout.push_back(r);
    else if (r.day < background_end_day)
      p.background.push_back(r);
    else
      p.foreground.push_back(r);
  }
  if (p.heldout.empty()) throw DataError("label '" + label + "' does not occur in the corpus");
  return p;
}

/// Splits without holding anything out.
inline Partition split_partitions(std::span<const Record> records, int background_end_day) {
  Partition p;
  for (const auto& r : records) (r.day < background_end_day ? p.background : p.foreground).push_back(r);
  return p;
}

struct GroundTruthDay {
  int day = 0;
  int event_day = 0;  // 1-based
  std::vector<std::string> injected_ids;
};

struct GroundTruth {
  InjectionSpec spec;
  std::vector<int> affected_locations;  // sorted
  std::vector<GroundTruthDay> days;
  std::map<std::string, double> word_distribution;  // empirical over all injected terms

  bool active(int day) const { return day >= spec.start_day && day < spec.start_day + spec.duration_days; }

  std::vector<std::string> injected_between(int first_day, int last_day) const {
    std::vector<std::string> ids;
    for (const auto& d : days)
      if (d.day >= first_day && d.day <= last_day) ids.insert(ids.end(), d.injected_ids.begin(), d.injected_ids.end());
    return ids;
  }
};

inline std::vector<int> affected_region(const LocationTable& locations, int center, int region_size) {
  if (region_size < 1 || static_cast<std::size_t>(region_size) > locations.size())
    throw ConfigError("region_size must lie in 1..N (N = " + std::to_string(locations.size()) + ")");
  if (center < 0 || static_cast<std::size_t>(center) >= locations.size()) throw ConfigError("center location out of range");
  auto row = locations.neighbors().row(static_cast<std::size_t>(center));
  std::vector<int> region(row.begin(), row.begin() + region_size);
  std::sort(region.begin(), region.end());
  return region;
}

struct Injection {
  std::vector<Record> records;  // foreground plus injected records
  GroundTruth truth;
};

/// Appends the event to the foreground: for each event day, Poisson(slope d)
/// records sampled uniformly with replacement from `heldout`, each placed
/// at a uniformly chosen location of the affected region and given a fresh id.
inline Injection inject_event(std::span<const Record> foreground, std::span<const Record> heldout,
                              const InjectionSpec& spec, const LocationTable& locations) {
  if (spec.duration_days < 1) throw ConfigError("event duration must be >= 1 day");
  if (!(spec.slope > 0.0)) throw ConfigError("event slope must be positive");
  if (heldout.empty()) throw DataError("no held-out records to inject");
  Injection out;
  out.truth.spec = spec;
  out.truth.affected_locations = affected_region(locations, spec.center_location, spec.region_size);
  out.records.assign(foreground.begin(), foreground.end());

  Rng rng(spec.seed);
  std::map<std::string, long> term_counts;
  long total_terms = 0;
  std::size_t serial = 0;
  for (int d = 1; d <= spec.duration_days; ++d) {
    GroundTruthDay gt{spec.start_day + d - 1, d, {}};
    const int count = poisson(rng, spec.slope * d);
    for (int j = 0; j < count; ++j) {
      const Record& src = heldout[uniform_index(rng, heldout.size())];
      Record r = src;
      r.id = "inj:" + spec.label + ":" + std::to_string(serial++);
      r.day = gt.day;
      r.location = out.truth.affected_locations[uniform_index(rng, out.truth.affected_locations.size())];
      for (const auto& t : r.terms) ++term_counts[t];
      total_terms += static_cast<long>(r.terms.size());
      gt.injected_ids.push_back(r.id);
      out.records.push_back(std::move(r));
    }
    out.truth.days.push_back(std::move(gt));
  }
  for (const auto& [term, c] : term_counts)
    out.truth.word_distribution[term] = static_cast<double>(c) / static_cast<double>(total_terms);
  return out;
}

/// Per-day output of a trial.
struct DayRecord {
  int day = 0;
  bool event_active = false;
  DetectionResult top;
  std::vector<int> detected_locations;  // sorted
  std::vector<double> topic_phi;        // detected foreground topic over the vocabulary
  std::vector<std::string> top_words;
  // Window documents assigned to the detected topic, and injected documents
  // in the same window.
  std::vector<std::string> detected_doc_ids;
  std::vector<std::string> injected_ids;
  std::vector<int> true_locations;  // empty when no event is active
};

struct TrialRecord {
  std::vector<std::string> vocabulary;
  std::optional<GroundTruth> truth;
  std::vector<double> truth_distribution;  // injected unigram distribution over the vocabulary
  std::vector<DayRecord> days;

  bool injected() const noexcept { return truth.has_value(); }
};

/// Everything a trial needs that does not depend on the injection: the
/// partitions, the background-only vocabulary, and the frozen background
/// topics. Shared by the null and injected runs of the same trial.
struct TrialContext {
  Partition partition;
  Vocabulary vocabulary;
  TopicSet background;
  int background_end_day = 0;
};

inline TrialContext prepare_trial(std::span<const Record> records, int background_end_day,
                                  const std::optional<std::string>& holdout_label, const PipelineConfig& config) {
  TrialContext ctx;
  ctx.background_end_day = background_end_day;
  ctx.partition = holdout_label ? hold_out_category(records, *holdout_label, background_end_day)
                                : split_partitions(records, background_end_day);
  ctx.vocabulary = build_vocabulary(ctx.partition.background, config.min_count);
  const auto bg_docs = encode(ctx.partition.background, ctx.vocabulary);
  ctx.background = learn_background(bg_docs, ctx.vocabulary.size(), config);
  return ctx;
}

/// Runs detection for every day in [first_day, last_day] over the background
/// and foreground records. With an injection the event is added to the
/// foreground first; without one this is a null trial over the same data and
/// seeds.
inline TrialRecord run_trial(const TrialContext& ctx, const std::optional<InjectionSpec>& injection,
                             const LocationTable& locations, const PipelineConfig& config, int first_day,
                             int last_day) {
  TrialRecord rec;
  rec.vocabulary = ctx.vocabulary.terms();
  std::vector<Record> foreground;
  if (injection) {
    Injection inj = inject_event(ctx.partition.foreground, ctx.partition.heldout, *injection, locations);
    foreground = std::move(inj.records);
    rec.truth = std::move(inj.truth);
    rec.truth_distribution.assign(ctx.vocabulary.size(), 0.0);
    double mass = 0.0;
    for (const auto& [term, p] : rec.truth->word_distribution)
      if (auto id = ctx.vocabulary.find(term)) {
        rec.truth_distribution[static_cast<std::size_t>(*id)] += p;
        mass += p;
      }
    if (mass > 0.0)
      for (double& p : rec.truth_distribution) p /= mass;
    else
      rec.truth_distribution.clear();
  } else {
    foreground = ctx.partition.foreground;
  }
  // Background-period records stay in the stream: they supply the baseline
  // history for detection days near the partition boundary.
  std::vector<Record> stream = ctx.partition.background;
  stream.insert(stream.end(), foreground.begin(), foreground.end());
  const std::vector<Document> docs = encode(stream, ctx.vocabulary);
  const std::size_t K = ctx.background.num_topics();

  for (int day = first_day; day <= last_day; ++day) {
    DayDetection det = detect_day(docs, ctx.background, locations.neighbors(), config, day);
    DayRecord dr;
    dr.day = day;
    dr.top = det.top();
    dr.detected_locations = region_locations(locations.neighbors(), dr.top.region);
    std::sort(dr.detected_locations.begin(), dr.detected_locations.end());
    const std::size_t topic = K + static_cast<std::size_t>(dr.top.topic);
    auto phi = det.topics.row(topic);
    dr.topic_phi.assign(phi.begin(), phi.end());
    for (TermId w : det.topics.top_terms(topic, 20)) dr.top_words.push_back(ctx.vocabulary.term(w));
    const int window_first = day - config.scan.w_max + 1;
    for (const auto& a : det.assigned)
      if (a.day >= window_first && static_cast<std::size_t>(a.topic()) == topic)
        dr.detected_doc_ids.push_back(docs[a.index].id);
    if (rec.truth) {
      dr.event_active = rec.truth->active(day);
      dr.injected_ids = rec.truth->injected_between(window_first, day);
      if (dr.event_active) dr.true_locations = rec.truth->affected_locations;
    }
    rec.days.push_back(std::move(dr));
  }
  return rec;
}

}  // namespace semscan
