#include <catch_amalgamated.hpp>

#include <set>

#include "semscan/simulate.hpp"
#include "semscan/synthetic.hpp"

using namespace semscan;
using Catch::Approx;

namespace {

LocationTable grid(int cols, int rows) {
  std::vector<Location> locs;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      locs.push_back({"L" + std::to_string(r * cols + c), static_cast<double>(c), static_cast<double>(r)});
  return LocationTable(locs);
}

std::vector<Record> labeled_records() {
  std::vector<Record> out;
  for (int i = 0; i < 40; ++i)
    out.push_back({"r" + std::to_string(i), i % 20, i % 4, {"w" + std::to_string(i % 5)},
                   std::string(i % 4 == 0 ? "X" : "Y")});
  out.push_back({"nolabel", 3, 0, {"w1"}, std::nullopt});
  return out;
}

InjectionSpec spec_with(std::uint64_t seed) {
  InjectionSpec s;
  s.label = "X";
  s.start_day = 30;
  s.duration_days = 5;
  s.center_location = 7;
  s.region_size = 5;
  s.slope = 20.0;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("holding out a category", "[simulate]") {
  const auto records = labeled_records();
  const Partition p = hold_out_category(records, "X", 10);
  CHECK(p.heldout.size() == 10);
  CHECK(p.background.size() + p.foreground.size() + p.heldout.size() == records.size());
  for (const auto& r : p.background) {
    CHECK(r.day < 10);
    CHECK(r.label != std::optional<std::string>("X"));
  }
  for (const auto& r : p.foreground) {
    CHECK(r.day >= 10);
    CHECK(r.label != std::optional<std::string>("X"));
  }
  CHECK_THROWS_AS(hold_out_category(records, "Z", 10), DataError);
}

TEST_CASE("affected region is the center and its nearest neighbors", "[simulate]") {
  const auto locs = grid(5, 4);
  const auto region = affected_region(locs, 7, 5);
  CHECK(region == std::vector<int>{2, 6, 7, 8, 12});
  CHECK(affected_region(locs, 0, 20).size() == 20);
  CHECK_THROWS_AS(affected_region(locs, 0, 21), ConfigError);
  CHECK_THROWS_AS(affected_region(locs, 0, 0), ConfigError);
}

TEST_CASE("injection counts follow the linear ramp", "[simulate][statistical]") {
  const auto locs = grid(5, 4);
  const auto records = labeled_records();
  const Partition p = hold_out_category(records, "X", 10);
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const Injection inj = inject_event(p.foreground, p.heldout, spec_with(seed), locs);
    sum += static_cast<double>(inj.truth.days[2].injected_ids.size());
  }
  const double mean = sum / 500.0;
  CHECK(std::abs(mean - 60.0) <= 2.0 * std::sqrt(60.0));
}

TEST_CASE("injected records respect the region, days and conservation", "[simulate]") {
  const auto locs = grid(5, 4);
  const auto records = labeled_records();
  const Partition p = hold_out_category(records, "X", 10);
  const InjectionSpec spec = spec_with(3);
  const Injection inj = inject_event(p.foreground, p.heldout, spec, locs);

  std::size_t injected = 0;
  std::set<std::string> ids;
  for (const auto& d : inj.truth.days) injected += d.injected_ids.size();
  CHECK(inj.records.size() == p.foreground.size() + injected);
  CHECK(inj.truth.affected_locations == affected_region(locs, spec.center_location, spec.region_size));

  std::map<std::string, long> term_counts;
  long total_terms = 0;
  for (std::size_t i = p.foreground.size(); i < inj.records.size(); ++i) {
    const Record& r = inj.records[i];
    CHECK(std::binary_search(inj.truth.affected_locations.begin(), inj.truth.affected_locations.end(), r.location));
    CHECK(r.day >= spec.start_day);
    CHECK(r.day < spec.start_day + spec.duration_days);
    CHECK(r.id.rfind("inj:X:", 0) == 0);
    CHECK(r.label == std::optional<std::string>("X"));
    ids.insert(r.id);
    for (const auto& t : r.terms) ++term_counts[t];
    total_terms += static_cast<long>(r.terms.size());
  }
  CHECK(ids.size() == injected);
  double mass = 0.0;
  for (const auto& [term, prob] : inj.truth.word_distribution) {
    CHECK(prob == Approx(static_cast<double>(term_counts[term]) / static_cast<double>(total_terms)));
    mass += prob;
  }
  CHECK(mass == Approx(1.0));

  // Same seed, same injection.
  const Injection again = inject_event(p.foreground, p.heldout, spec, locs);
  CHECK(again.truth.days.back().injected_ids == inj.truth.days.back().injected_ids);
}

TEST_CASE("injection preconditions", "[simulate]") {
  const auto locs = grid(5, 4);
  const auto records = labeled_records();
  const Partition p = hold_out_category(records, "X", 10);
  auto s = spec_with(1);
  s.duration_days = 0;
  CHECK_THROWS_AS(inject_event(p.foreground, p.heldout, s, locs), ConfigError);
  s = spec_with(1);
  s.slope = 0.0;
  CHECK_THROWS_AS(inject_event(p.foreground, p.heldout, s, locs), ConfigError);
  s = spec_with(1);
  s.region_size = 21;
  CHECK_THROWS_AS(inject_event(p.foreground, p.heldout, s, locs), ConfigError);
  CHECK_THROWS_AS(inject_event(p.foreground, std::vector<Record>{}, spec_with(1), locs), DataError);
}

TEST_CASE("trials are deterministic and null trials differ only by injection", "[simulate]") {
  SyntheticSpec sspec;
  sspec.grid_cols = 3;
  sspec.grid_rows = 2;
  sspec.topics = 3;
  sspec.words_per_topic = 8;
  sspec.background_days = 40;
  sspec.foreground_days = 4;
  sspec.event_pool = 30;
  sspec.seed = 5;
  const SyntheticCorpus corpus = make_synthetic_corpus(sspec);
  const LocationTable locs(corpus.locations);

  PipelineConfig config;
  config.background_topics = 3;
  config.foreground_topics = 2;
  config.background_sweeps = 20;
  config.window_init_sweeps = 10;
  config.window_refit_sweeps = 10;
  config.scan.n_max = 3;
  config.seed = 11;

  const TrialContext ctx = prepare_trial(corpus.records, corpus.background_end_day, sspec.event_label, config);
  InjectionSpec inj;
  inj.label = sspec.event_label;
  inj.start_day = corpus.background_end_day + 1;
  inj.duration_days = 2;
  inj.center_location = 4;
  inj.region_size = 2;
  inj.slope = 3.0;
  inj.seed = 9;
  const int first = corpus.background_end_day, last = corpus.last_day;

  const TrialRecord a = run_trial(ctx, inj, locs, config, first, last);
  const TrialRecord b = run_trial(ctx, inj, locs, config, first, last);
  REQUIRE(a.days.size() == static_cast<std::size_t>(last - first + 1));
  for (std::size_t i = 0; i < a.days.size(); ++i) {
    CHECK(a.days[i].top == b.days[i].top);
    CHECK(a.days[i].topic_phi == b.days[i].topic_phi);
    CHECK(a.days[i].detected_doc_ids == b.days[i].detected_doc_ids);
  }
  CHECK(a.truth_distribution.size() == ctx.vocabulary.size());
  CHECK_FALSE(a.days[0].event_active);
  CHECK(a.days[1].event_active);
  CHECK(a.days[1].true_locations == affected_region(locs, 4, 2));
  CHECK(a.days[3].true_locations.empty());

  const TrialRecord null = run_trial(ctx, std::nullopt, locs, config, first, last);
  CHECK_FALSE(null.injected());
  for (const auto& d : null.days) {
    CHECK_FALSE(d.event_active);
    CHECK(d.injected_ids.empty());
    CHECK(d.true_locations.empty());
  }
  // Before the event starts the two runs see identical data.
  CHECK(null.days[0].top == a.days[0].top);
}

TEST_CASE("synthetic corpus generator", "[simulate]") {
  SyntheticSpec spec;
  spec.seed = 3;
  const SyntheticCorpus a = make_synthetic_corpus(spec);
  const SyntheticCorpus b = make_synthetic_corpus(spec);
  CHECK(a.records.size() == b.records.size());
  CHECK(a.records.back().terms == b.records.back().terms);
  CHECK(a.locations.size() == 20);
  CHECK(a.event_terms.size() == 6);
  std::size_t events = 0;
  for (const auto& r : a.records) {
    CHECK(r.day <= a.last_day);
    if (r.label == std::optional<std::string>("event")) {
      ++events;
      CHECK(r.day >= a.background_end_day);
    }
  }
  CHECK(events == 300);
}
