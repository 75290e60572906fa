#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semscan/error.hpp"
#include "semscan/simulate.hpp"

namespace semscan {

/// (1/sqrt 2) * || sqrt p - sqrt q ||_2 for two distributions over the
/// same support. Each input must be non-negative and sum to 1 within 1e-6.
inline double hellinger(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error("hellinger: distributions differ in length");
  auto check = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw Error("hellinger: negative or non-finite probability");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-6) throw Error("hellinger: distribution is not normalized");
  };
  check(p);
  check(q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    sum += d * d;
  }
  return std::min(1.0, std::sqrt(sum / 2.0));
}

/// |A ∩ B| / |A ∪ B|, and 1 when both are empty. Duplicates are ignored.
template <typename T>
double jaccard_overlap(std::vector<T> a, std::vector<T> b) {
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (auto i = a.begin(), j = b.begin(); i != a.end() && j != b.end();) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

inline constexpr double kDaysPerYear = 365.25;

/// Alarm threshold for a target false-positive rate: the
/// (1 - target/365.25) quantile of daily null top scores, taking the
/// higher order statistic so that the realized rate never exceeds the target.
/// A day alarms when its top score is strictly above the threshold.
inline double calibrate_threshold(std::span<const double> null_scores, double target_fp_per_year,
                                  std::size_t min_days = 60) {
  if (null_scores.size() < min_days)
    throw DataError("threshold calibration needs at least " + std::to_string(min_days) + " null days, got " +
                    std::to_string(null_scores.size()));
  if (!(target_fp_per_year > 0.0)) throw ConfigError("false-positive target must be positive");
  std::vector<double> sorted(null_scores.begin(), null_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double q = std::clamp(1.0 - target_fp_per_year / kDaysPerYear, 0.0, 1.0);
  const double pos = q * static_cast<double>(sorted.size() - 1);
  auto idx = static_cast<std::size_t>(std::ceil(pos - 1e-9));
  idx = std::min(idx, sorted.size() - 1);
  return sorted[idx];
}

inline std::vector<double> null_day_scores(std::span<const TrialRecord> null_trials) {
  std::vector<double> scores;
  for (const auto& t : null_trials)
    for (const auto& d : t.days) scores.push_back(d.top.score);
  return scores;
}

struct ThresholdPoint {
  double fp_per_year = 0.0;
  double threshold = 0.0;
};

inline std::vector<ThresholdPoint> calibrate_thresholds(std::span<const double> null_scores,
                                                        std::span<const double> fp_targets) {
  std::vector<ThresholdPoint> out;
  for (double fp : fp_targets) out.push_back({fp, calibrate_threshold(null_scores, fp)});
  return out;
}

/// Characterization of one day's top detection against the ground truth.
struct DayQuality {
  double hellinger = std::numeric_limits<double>::quiet_NaN();  // NaN without a truth distribution
  double spatial_overlap = 0.0;
  double document_overlap = 0.0;
};

inline DayQuality day_quality(const TrialRecord& trial, const DayRecord& day) {
  DayQuality q;
  if (!trial.truth_distribution.empty() && day.topic_phi.size() == trial.truth_distribution.size())
    q.hellinger = hellinger(day.topic_phi, trial.truth_distribution);
  q.spatial_overlap = jaccard_overlap(day.detected_locations, day.true_locations);
  q.document_overlap = jaccard_overlap(day.detected_doc_ids, day.injected_ids);
  return q;
}

struct ThresholdRow {
  double fp_per_year = 0.0;
  double threshold = 0.0;
  std::size_t trials = 0;
  std::size_t detected = 0;
  double fraction_detected = 0.0;
  double mean_days_to_detect = std::numeric_limits<double>::quiet_NaN();
  // Means over detected trials, taken on each trial's first alarm day.
  double mean_hd_at_alarm = std::numeric_limits<double>::quiet_NaN();
  double mean_so_at_alarm = std::numeric_limits<double>::quiet_NaN();
  double mean_do_at_alarm = std::numeric_limits<double>::quiet_NaN();
};

struct DayCurveRow {
  int event_day = 0;
  std::size_t trials = 0;
  double mean_hd = std::numeric_limits<double>::quiet_NaN();
  double mean_so = 0.0;
  double mean_do = 0.0;
};

struct DetectionMetrics {
  std::vector<ThresholdRow> thresholds;
  std::vector<DayCurveRow> curve;
};

/// First event day (1-based) whose top score exceeds the threshold, if any.
/// Alarms outside the active event window do not count.
inline std::optional<int> days_to_detect(const TrialRecord& trial, double threshold) {
  if (!trial.truth) return std::nullopt;
  for (const auto& d : trial.days)
    if (d.event_active && d.top.score > threshold) return d.day - trial.truth->spec.start_day + 1;
  return std::nullopt;
}

/// Detection rate and timeliness per threshold, plus per-event-day means of
/// the three characterization metrics over the injected trials.
inline DetectionMetrics detection_metrics(std::span<const TrialRecord> trials,
                                          std::span<const ThresholdPoint> thresholds) {
  DetectionMetrics m;
  std::vector<const TrialRecord*> injected;
  for (const auto& t : trials)
    if (t.injected()) injected.push_back(&t);

  for (const auto& tp : thresholds) {
    ThresholdRow row;
    row.fp_per_year = tp.fp_per_year;
    row.threshold = tp.threshold;
    row.trials = injected.size();
    double days = 0.0, hd = 0.0, so = 0.0, dov = 0.0;
    std::size_t hd_n = 0;
    for (const TrialRecord* t : injected) {
      const auto dtd = days_to_detect(*t, tp.threshold);
      if (!dtd) continue;
      ++row.detected;
      days += *dtd;
      const int alarm_day = t->truth->spec.start_day + *dtd - 1;
      for (const auto& d : t->days)
        if (d.day == alarm_day) {
          const DayQuality q = day_quality(*t, d);
          if (!std::isnan(q.hellinger)) {
            hd += q.hellinger;
            ++hd_n;
          }
          so += q.spatial_overlap;
          dov += q.document_overlap;
        }
    }
    row.fraction_detected = row.trials ? static_cast<double>(row.detected) / static_cast<double>(row.trials) : 0.0;
    if (row.detected > 0) {
      const auto n = static_cast<double>(row.detected);
      row.mean_days_to_detect = days / n;
      row.mean_so_at_alarm = so / n;
      row.mean_do_at_alarm = dov / n;
      if (hd_n > 0) row.mean_hd_at_alarm = hd / static_cast<double>(hd_n);
    }
    m.thresholds.push_back(row);
  }

  int max_event_day = 0;
  for (const TrialRecord* t : injected)
    for (const auto& d : t->days)
      if (d.event_active) max_event_day = std::max(max_event_day, d.day - t->truth->spec.start_day + 1);
  for (int e = 1; e <= max_event_day; ++e) {
    DayCurveRow row;
    row.event_day = e;
    double hd = 0.0, so = 0.0, dov = 0.0;
    std::size_t hd_n = 0;
    for (const TrialRecord* t : injected)
      for (const auto& d : t->days) {
        if (!d.event_active || d.day - t->truth->spec.start_day + 1 != e) continue;
        const DayQuality q = day_quality(*t, d);
        ++row.trials;
        if (!std::isnan(q.hellinger)) {
          hd += q.hellinger;
          ++hd_n;
        }
        so += q.spatial_overlap;
        dov += q.document_overlap;
      }
    if (row.trials > 0) {
      row.mean_so = so / static_cast<double>(row.trials);
      row.mean_do = dov / static_cast<double>(row.trials);
      if (hd_n > 0) row.mean_hd = hd / static_cast<double>(hd_n);
    }
    m.curve.push_back(row);
  }
  return m;
}

}  // namespace semscan
