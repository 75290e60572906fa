#include <catch_amalgamated.hpp>

#include <numeric>

#include "semscan/eval.hpp"

using namespace semscan;
using Catch::Approx;

namespace {

std::vector<double> random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) s += (x = uniform01(rng) * (uniform01(rng) < 0.3 ? 0.0 : 1.0));
  if (s == 0.0) {
    p[0] = 1.0;
    s = 1.0;
  }
  for (auto& x : p) x /= s;
  return p;
}

// One injected trial with a scripted score series. Event starts on day 10.
TrialRecord scripted_trial(const std::vector<double>& scores, bool perfect = true) {
  TrialRecord t;
  t.vocabulary = {"a", "b"};
  t.truth_distribution = {0.75, 0.25};
  GroundTruth g;
  g.spec.start_day = 10;
  g.spec.duration_days = static_cast<int>(scores.size());
  g.affected_locations = {1, 2};
  t.truth = g;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    DayRecord d;
    d.day = 10 + static_cast<int>(i);
    d.event_active = true;
    d.top.score = scores[i];
    d.true_locations = {1, 2};
    d.injected_ids = {"i" + std::to_string(i)};
    if (perfect) {
      d.detected_locations = d.true_locations;
      d.detected_doc_ids = d.injected_ids;
      d.topic_phi = t.truth_distribution;
    } else {
      d.detected_locations = {2, 3};
      d.detected_doc_ids = {};
      d.topic_phi = {0.25, 0.75};
    }
    t.days.push_back(d);
  }
  return t;
}

}  // namespace

TEST_CASE("hellinger distance", "[eval]") {
  const std::vector<double> p{1.0, 0.0}, q{0.5, 0.5}, r{0.0, 1.0};
  CHECK(hellinger(p, p) == 0.0);
  CHECK(hellinger(p, r) == Approx(1.0));
  CHECK(hellinger(p, q) == Approx(0.5411961001461970).margin(1e-12));
  CHECK_THROWS(hellinger(std::vector<double>{0.5, 0.4}, q));
  CHECK_THROWS(hellinger(std::vector<double>{1.0}, q));
  CHECK_THROWS(hellinger(std::vector<double>{1.5, -0.5}, q));
}

TEST_CASE("hellinger is a bounded symmetric metric", "[eval][property]") {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_distribution(rng, 6), b = random_distribution(rng, 6), c = random_distribution(rng, 6);
    const double ab = hellinger(a, b), ba = hellinger(b, a);
    CHECK(ab == ba);
    CHECK((ab >= 0.0 && ab <= 1.0));
    CHECK(hellinger(a, c) <= ab + hellinger(b, c) + 1e-12);
  }
}

TEST_CASE("jaccard overlap", "[eval]") {
  CHECK(jaccard_overlap<std::string>({"a", "b"}, {"b", "c"}) == Approx(1.0 / 3.0));
  CHECK(jaccard_overlap<int>({1, 2}, {1, 2}) == 1.0);
  CHECK(jaccard_overlap<int>({1}, {2}) == 0.0);
  CHECK(jaccard_overlap<int>({}, {}) == 1.0);
  CHECK(jaccard_overlap<int>({}, {3}) == 0.0);
  CHECK(jaccard_overlap<int>({1, 1, 2}, {2}) == 0.5);
}

TEST_CASE("jaccard overlap is symmetric and bounded", "[eval][property]") {
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    std::vector<int> a, b;
    for (std::size_t k = uniform_index(rng, 6); k > 0; --k) a.push_back(static_cast<int>(uniform_index(rng, 8)));
    for (std::size_t k = uniform_index(rng, 6); k > 0; --k) b.push_back(static_cast<int>(uniform_index(rng, 8)));
    const double ab = jaccard_overlap(a, b);
    CHECK(ab == jaccard_overlap(b, a));
    CHECK((ab >= 0.0 && ab <= 1.0));
  }
}

TEST_CASE("threshold calibration", "[eval]") {
  std::vector<double> scores(100);
  std::iota(scores.begin(), scores.end(), 1.0);
  CHECK(calibrate_threshold(scores, 0.05 * kDaysPerYear) == 96.0);
  CHECK(calibrate_threshold(std::vector<double>(80, 0.0), 12.0) == 0.0);
  CHECK_THROWS_AS(calibrate_threshold(std::vector<double>(59, 0.0), 12.0), DataError);
  CHECK_THROWS_AS(calibrate_threshold(scores, 0.0), ConfigError);
  // Shuffled input gives the same answer.
  std::reverse(scores.begin(), scores.end());
  CHECK(calibrate_threshold(scores, 0.05 * kDaysPerYear) == 96.0);
}

TEST_CASE("realized false-positive rate stays within the target", "[eval][statistical]") {
  Rng rng(21);
  std::vector<double> calib(3000), holdout(3000);
  for (auto& s : calib) s = -std::log(1.0 - uniform01(rng));
  for (auto& s : holdout) s = -std::log(1.0 - uniform01(rng));
  for (double fp : {52.0, 12.0, 4.0}) {
    const double thr = calibrate_threshold(calib, fp);
    const double rate = static_cast<double>(std::count_if(holdout.begin(), holdout.end(), [&](double s) { return s > thr; })) /
                        static_cast<double>(holdout.size());
    const double target = fp / kDaysPerYear;
    CHECK(rate <= target + 3.0 * std::sqrt(target * (1 - target) / 3000.0));
    // In-sample the rate never exceeds the target.
    const double in_sample = static_cast<double>(std::count_if(calib.begin(), calib.end(), [&](double s) { return s > thr; })) /
                             static_cast<double>(calib.size());
    CHECK(in_sample <= target);
  }
}

TEST_CASE("days to detect and detection metrics", "[eval]") {
  std::vector<TrialRecord> trials{scripted_trial({1.0, 9.0, 20.0}), scripted_trial({0.0, 0.0, 0.0}),
                                  scripted_trial({15.0, 1.0, 1.0})};
  CHECK(days_to_detect(trials[0], 5.0) == 2);
  CHECK_FALSE(days_to_detect(trials[1], 5.0));
  CHECK(days_to_detect(trials[2], 5.0) == 1);

  const std::vector<ThresholdPoint> thresholds{{52.0, 5.0}, {12.0, 10.0}, {1.0, 100.0}};
  const auto m = detection_metrics(trials, thresholds);
  REQUIRE(m.thresholds.size() == 3);
  CHECK(m.thresholds[0].detected == 2);
  CHECK(m.thresholds[0].fraction_detected == Approx(2.0 / 3.0));
  CHECK(m.thresholds[0].mean_days_to_detect == 1.5);
  CHECK(m.thresholds[1].mean_days_to_detect == 2.0);  // days 3 and 1
  CHECK(m.thresholds[2].detected == 0);
  CHECK(std::isnan(m.thresholds[2].mean_days_to_detect));
  // A perfect detector: overlaps 1, distance 0.
  CHECK(m.thresholds[0].mean_so_at_alarm == 1.0);
  CHECK(m.thresholds[0].mean_do_at_alarm == 1.0);
  CHECK(m.thresholds[0].mean_hd_at_alarm == 0.0);
  REQUIRE(m.curve.size() == 3);
  for (const auto& row : m.curve) {
    CHECK(row.trials == 3);
    CHECK(row.mean_hd == 0.0);
    CHECK(row.mean_so == 1.0);
    CHECK(row.mean_do == 1.0);
  }
}

TEST_CASE("day quality of an imperfect detection", "[eval]") {
  const TrialRecord t = scripted_trial({1.0}, false);
  const DayQuality q = day_quality(t, t.days[0]);
  CHECK(q.spatial_overlap == Approx(1.0 / 3.0));
  CHECK(q.document_overlap == 0.0);
  CHECK(q.hellinger == Approx(hellinger(std::vector<double>{0.25, 0.75}, std::vector<double>{0.75, 0.25})));
}

TEST_CASE("alarms outside the event window do not count", "[eval]") {
  TrialRecord t = scripted_trial({1.0, 1.0});
  DayRecord late;
  late.day = 12;
  late.top.score = 50.0;
  t.days.push_back(late);
  CHECK_FALSE(days_to_detect(t, 5.0));
}

TEST_CASE("curves are monotone in the false-positive target", "[eval][property]") {
  Rng rng(3);
  std::vector<double> null_scores(400);
  for (auto& s : null_scores) s = 10.0 * uniform01(rng);
  std::vector<TrialRecord> trials;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> s(8);
    for (auto& x : s) x = 12.0 * uniform01(rng);
    trials.push_back(scripted_trial(s));
  }
  std::vector<double> targets;
  for (double fp = 52.0; fp >= 1.0; fp -= 1.0) targets.push_back(fp);
  const auto points = calibrate_thresholds(null_scores, targets);
  const auto m = detection_metrics(trials, points);
  for (std::size_t i = 1; i < points.size(); ++i) {
    CHECK(points[i].threshold >= points[i - 1].threshold);
    CHECK(m.thresholds[i].fraction_detected <= m.thresholds[i - 1].fraction_detected);
  }
}
