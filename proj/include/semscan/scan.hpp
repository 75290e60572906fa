#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "semscan/assign.hpp"
#include "semscan/corpus.hpp"
#include "semscan/error.hpp"
#include "semscan/random.hpp"

namespace semscan {

/// Dense (location, foreground topic, day) cube over an inclusive day range.
template <typename T>
class Cube {
 public:
  Cube() = default;
  Cube(std::size_t locations, std::size_t topics, int first_day, int last_day)
      : locations_(locations), topics_(topics), first_day_(first_day),
        days_(last_day >= first_day ? static_cast<std::size_t>(last_day - first_day + 1) : 0),
        data_(locations_ * topics_ * days_, T{}) {}

  std::size_t locations() const noexcept { return locations_; }
  std::size_t topics() const noexcept { return topics_; }
  std::size_t num_days() const noexcept { return days_; }
  int first_day() const noexcept { return first_day_; }
  int last_day() const noexcept { return first_day_ + static_cast<int>(days_) - 1; }
  bool covers(int day) const noexcept { return day >= first_day_ && day <= last_day(); }

  T& at(std::size_t loc, std::size_t topic, int day) { return data_[offset(loc, topic, day)]; }
  const T& at(std::size_t loc, std::size_t topic, int day) const { return data_[offset(loc, topic, day)]; }

  T total() const {
    T sum{};
    for (const T& v : data_) sum += v;
    return sum;
  }

  friend bool operator==(const Cube&, const Cube&) = default;

 private:
  std::size_t offset(std::size_t loc, std::size_t topic, int day) const {
    return (loc * topics_ + topic) * days_ + static_cast<std::size_t>(day - first_day_);
  }

  std::size_t locations_ = 0;
  std::size_t topics_ = 0;
  int first_day_ = 0;
  std::size_t days_ = 0;
  std::vector<T> data_;
};

using CountCube = Cube<int>;
using BaselineCube = Cube<double>;

/// c[i][k][t] = number of documents at location i on day t assigned to
/// foreground topic k (topic index minus the background count). Documents
/// assigned to background topics or outside the day range are ignored.
inline CountCube build_count_cube(std::span<const AssignedDocument> assigned, std::size_t background_topics,
                                  std::size_t foreground_topics, std::size_t num_locations, int first_day,
                                  int last_day) {
  CountCube cube(num_locations, foreground_topics, first_day, last_day);
  for (const auto& a : assigned) {
    if (!a.is_foreground() || !cube.covers(a.day)) continue;
    const auto k = static_cast<std::size_t>(a.topic()) - background_topics;
    if (k >= foreground_topics || a.location < 0 || static_cast<std::size_t>(a.location) >= num_locations)
      throw DataError("assigned document outside the cube's topic or location range");
    ++cube.at(static_cast<std::size_t>(a.location), k, a.day);
  }
  return cube;
}

/// b[i][k][t] = mean of c[i][k][t - baseline_days .. t - 1]. The result
/// covers every day of the count cube that has a full trailing history.
inline BaselineCube build_baseline_cube(const CountCube& counts, int baseline_days = 30) {
  if (baseline_days < 1) throw ConfigError("baseline_days must be >= 1");
  const int first = counts.first_day() + baseline_days;
  if (first > counts.last_day())
    throw DataError("insufficient history for baselines: earliest valid detection day is " + std::to_string(first));
  BaselineCube cube(counts.locations(), counts.topics(), first, counts.last_day());
  for (std::size_t i = 0; i < counts.locations(); ++i) {
    for (std::size_t k = 0; k < counts.topics(); ++k) {
      long window = 0;
      for (int t = counts.first_day(); t < first; ++t) window += counts.at(i, k, t);
      for (int t = first; t <= counts.last_day(); ++t) {
        cube.at(i, k, t) = static_cast<double>(window) / baseline_days;
        window += counts.at(i, k, t) - counts.at(i, k, t - baseline_days);
      }
    }
  }
  return cube;
}

/// Expectation-based Poisson log-likelihood ratio:
/// C log(C/B) + B - C when C > B, else 0.
inline double ebp_score(double count, double baseline) {
  if (!std::isfinite(count) || !std::isfinite(baseline) || count < 0.0 || baseline < 0.0)
    throw Error("ebp_score requires finite non-negative inputs");
  if (count <= baseline) return 0.0;
  if (baseline == 0.0) throw Error("ebp_score: zero baseline with positive count; floor the baseline first");
  return count * std::log(count / baseline) + baseline - count;
}

struct ScanOptions {
  int n_max = 30;
  int w_max = 3;
  double baseline_floor = 0.5;
};

/// Center plus its n nearest neighbors, crossed with the most recent W days
/// up to the detection day.
struct SpaceTimeRegion {
  int center = 0;
  int n = 1;
  int w = 1;

  friend bool operator==(const SpaceTimeRegion&, const SpaceTimeRegion&) = default;
};

inline std::vector<int> region_locations(const NeighborOrder& order, const SpaceTimeRegion& region) {
  auto row = order.row(static_cast<std::size_t>(region.center));
  return {row.begin(), row.begin() + region.n + 1};
}

struct DetectionResult {
  SpaceTimeRegion region;
  int topic = 0;  // foreground topic index, 0..K'-1
  double count = 0.0;
  double baseline = 0.0;  // unfloored aggregate
  double score = 0.0;
  double relative_risk = 0.0;  // count / floored baseline
  std::optional<double> p_value;

  friend bool operator==(const DetectionResult&, const DetectionResult&) = default;
};

/// Ranking order: higher score first, then smaller W, smaller n, lower
/// center, lower topic.
inline bool ranks_before(const DetectionResult& a, const DetectionResult& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.region.w != b.region.w) return a.region.w < b.region.w;
  if (a.region.n != b.region.n) return a.region.n < b.region.n;
  if (a.region.center != b.region.center) return a.region.center < b.region.center;
  return a.topic < b.topic;
}

namespace detail {

inline void check_scan_inputs(const CountCube& counts, const BaselineCube& baselines, const NeighborOrder& order,
                              const ScanOptions& opt, int detection_day) {
  const std::size_t N = order.size();
  if (opt.n_max < 1 || opt.w_max < 1) throw ConfigError("n_max and W_max must be >= 1");
  if (static_cast<std::size_t>(opt.n_max) >= N)
    throw ConfigError("n_max (" + std::to_string(opt.n_max) + ") must be below the location count (" +
                      std::to_string(N) + ")");
  if (!(opt.baseline_floor > 0.0)) throw ConfigError("baseline floor must be positive");
  if (counts.locations() != N || baselines.locations() != N)
    throw Error("cube location count differs from the neighbor table");
  if (counts.topics() != baselines.topics()) throw Error("count and baseline cubes disagree on topic count");
  const int first = detection_day - opt.w_max + 1;
  if (!counts.covers(first) || !counts.covers(detection_day) || !baselines.covers(first) ||
      !baselines.covers(detection_day))
    throw DataError("cubes do not cover the scan window ending on day " + std::to_string(detection_day));
}

// Visits every (center, topic, W, n) cell. Aggregates accumulate location by
// location along the neighbor order; within a location the W days are summed
// oldest first.
template <typename Visit>
void enumerate_regions(const CountCube& counts, const BaselineCube& baselines, const NeighborOrder& order,
                       const ScanOptions& opt, int detection_day, std::size_t center_begin, std::size_t center_end,
                       Visit&& visit) {
  const std::size_t K = counts.topics();
  const auto W = static_cast<std::size_t>(opt.w_max);
  const std::size_t N = order.size();
  // Per (location, topic, W) windowed sums.
  std::vector<double> csum(N * K * W), bsum(N * K * W);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t w = 1; w <= W; ++w) {
        double c = 0.0, b = 0.0;
        for (int t = detection_day - static_cast<int>(w) + 1; t <= detection_day; ++t) {
          c += counts.at(i, k, t);
          b += baselines.at(i, k, t);
        }
        csum[(i * K + k) * W + (w - 1)] = c;
        bsum[(i * K + k) * W + (w - 1)] = b;
      }

  for (std::size_t center = center_begin; center < center_end; ++center) {
    auto row = order.row(center);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t w = 1; w <= W; ++w) {
        double c = 0.0, b = 0.0;
        for (int j = 0; j <= opt.n_max; ++j) {
          const auto loc = static_cast<std::size_t>(row[static_cast<std::size_t>(j)]);
          c += csum[(loc * K + k) * W + (w - 1)];
          b += bsum[(loc * K + k) * W + (w - 1)];
          if (j >= 1) visit(static_cast<int>(center), static_cast<int>(k), static_cast<int>(w), j, c, b);
        }
      }
  }
}

inline DetectionResult make_result(int center, int topic, int w, int n, double c, double b, double floor) {
  DetectionResult r;
  r.region = {center, n, w};
  r.topic = topic;
  r.count = c;
  r.baseline = b;
  const double eff = std::max(b, floor);
  r.score = ebp_score(c, eff);
  r.relative_risk = c / eff;
  return r;
}

}  // namespace detail

/// Scores every (center, n, W, foreground topic) combination and returns
/// them ranked by `ranks_before`. `limit` > 0 keeps only the leading results.
/// The aggregate baseline is floored at `baseline_floor` before scoring.
inline std::vector<DetectionResult> scan_all(const CountCube& counts, const BaselineCube& baselines,
                                             const NeighborOrder& order, const ScanOptions& opt, int detection_day,
                                             std::size_t limit = 0, unsigned threads = 1) {
  detail::check_scan_inputs(counts, baselines, order, opt, detection_day);
  const std::size_t N = order.size();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(N)));
  std::vector<std::vector<DetectionResult>> parts(threads);
  auto work = [&](unsigned t) {
    const std::size_t chunk = (N + threads - 1) / threads;
    const std::size_t begin = t * chunk, end = std::min(N, begin + chunk);
    if (begin >= end) return;
    detail::enumerate_regions(counts, baselines, order, opt, detection_day, begin, end,
                              [&](int center, int k, int w, int n, double c, double b) {
                                parts[t].push_back(detail::make_result(center, k, w, n, c, b, opt.baseline_floor));
                              });
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  std::vector<DetectionResult> all;
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  if (limit > 0 && limit < all.size()) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(limit), all.end(), ranks_before);
    all.resize(limit);
  } else {
    std::sort(all.begin(), all.end(), ranks_before);
  }
  return all;
}

/// Highest-ranked result only; same order as the head of `scan_all`.
inline DetectionResult scan_top(const CountCube& counts, const BaselineCube& baselines, const NeighborOrder& order,
                                const ScanOptions& opt, int detection_day) {
  detail::check_scan_inputs(counts, baselines, order, opt, detection_day);
  std::optional<DetectionResult> best;
  detail::enumerate_regions(counts, baselines, order, opt, detection_day, 0, order.size(),
                            [&](int center, int k, int w, int n, double c, double b) {
                              auto r = detail::make_result(center, k, w, n, c, b, opt.baseline_floor);
                              if (!best || ranks_before(r, *best)) best = r;
                            });
  if (!best) throw Error("scan produced no regions");
  return *best;
}

/// Monte Carlo p-value of an observed top score. Each replica draws
/// c ~ Poisson(b) for every scanned cell and rescans with the same
/// baselines; p = (1 + #{replica top >= observed}) / (1 + replicas).
inline double randomization_test(double observed_top_score, const BaselineCube& baselines,
                                 const NeighborOrder& order, const ScanOptions& opt, int detection_day,
                                 int replicas, std::uint64_t seed) {
  if (replicas < 1) throw ConfigError("randomization test needs at least one replica");
  const int first = detection_day - opt.w_max + 1;
  int at_least = 0;
  for (int r = 0; r < replicas; ++r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    CountCube replica(baselines.locations(), baselines.topics(), first, detection_day);
    for (std::size_t i = 0; i < baselines.locations(); ++i)
      for (std::size_t k = 0; k < baselines.topics(); ++k)
        for (int t = first; t <= detection_day; ++t) replica.at(i, k, t) = poisson(rng, baselines.at(i, k, t));
    const double top = scan_top(replica, baselines, order, opt, detection_day).score;
    if (top >= observed_top_score) ++at_least;
  }
  return static_cast<double>(1 + at_least) / static_cast<double>(1 + replicas);
}

}  // namespace semscan
