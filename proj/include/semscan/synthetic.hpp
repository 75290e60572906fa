#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "semscan/corpus.hpp"
#include "semscan/random.hpp"

namespace semscan {

/// Parameters of a synthetic geo-tagged corpus: a rectangular grid of
/// locations, topics owning disjoint blocks of terms with Zipf-shaped word
/// frequencies, and a labeled pool of "event" documents built from a novel
/// combination of low-frequency terms borrowed from several topics.
struct SyntheticSpec {
  int grid_cols = 5;
  int grid_rows = 4;
  int topics = 10;
  int words_per_topic = 20;
  int background_days = 60;
  int foreground_days = 45;
  double docs_per_location_day = 3.0;
  int min_length = 4;
  int max_length = 8;
  double noise = 0.1;  // chance a token is drawn uniformly from the vocabulary
  double event_noise = 0.1;
  // Event terms: `event_terms_per_topic` tail terms from each of
  // `event_source_topics` topics.
  int event_source_topics = 3;
  int event_terms_per_topic = 2;
  int event_pool = 300;
  std::string event_label = "event";
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<Location> locations;
  std::vector<Record> records;
  std::vector<std::string> event_terms;
  int background_end_day = 0;
  int last_day = 0;
};

inline std::string synthetic_term(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%03d", index);
  return buf;
}

inline SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec) {
  SyntheticCorpus out;
  for (int r = 0; r < spec.grid_rows; ++r)
    for (int c = 0; c < spec.grid_cols; ++c)
      out.locations.push_back({"L" + std::to_string(r * spec.grid_cols + c), static_cast<double>(c),
                               static_cast<double>(r)});
  const int vocab = spec.topics * spec.words_per_topic;
  out.background_end_day = spec.background_days;
  out.last_day = spec.background_days + spec.foreground_days - 1;

  // Zipf(1) over the words of each topic block.
  std::vector<double> zipf(static_cast<std::size_t>(spec.words_per_topic));
  double zsum = 0.0;
  for (int j = 0; j < spec.words_per_topic; ++j) zsum += (zipf[static_cast<std::size_t>(j)] = 1.0 / (j + 1));

  Rng rng(mix_seed(spec.seed, 0));
  auto topic_word = [&](int topic) {
    const auto j = sample_weighted(rng, zipf, zsum);
    return synthetic_term(topic * spec.words_per_topic + static_cast<int>(j));
  };
  auto length = [&] {
    return spec.min_length + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.max_length - spec.min_length + 1)));
  };

  // Event vocabulary: tail terms of evenly spaced topics.
  const int stride = std::max(1, spec.topics / std::max(1, spec.event_source_topics));
  for (int s = 0; s < spec.event_source_topics; ++s) {
    const int topic = (s * stride) % spec.topics;
    for (int j = 0; j < spec.event_terms_per_topic; ++j)
      out.event_terms.push_back(synthetic_term(topic * spec.words_per_topic + spec.words_per_topic - 1 - j));
  }

  std::size_t serial = 0;
  const auto num_locations = out.locations.size();
  for (int day = 0; day <= out.last_day; ++day)
    for (std::size_t loc = 0; loc < num_locations; ++loc) {
      const int n = poisson(rng, spec.docs_per_location_day);
      for (int i = 0; i < n; ++i) {
        Record r;
        r.id = "d" + std::to_string(serial++);
        r.day = day;
        r.location = static_cast<int>(loc);
        const int topic = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.topics)));
        r.label = "topic" + std::to_string(topic);
        const int len = length();
        for (int t = 0; t < len; ++t)
          r.terms.push_back(uniform01(rng) < spec.noise
                                ? synthetic_term(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(vocab))))
                                : topic_word(topic));
        out.records.push_back(std::move(r));
      }
    }

  // The event pool is scattered over the foreground period; a trial holds it
  // out and re-injects it as a localized event.
  for (int i = 0; i < spec.event_pool; ++i) {
    Record r;
    r.id = "e" + std::to_string(i);
    r.day = spec.background_days +
            static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.foreground_days)));
    r.location = static_cast<int>(uniform_index(rng, num_locations));
    r.label = spec.event_label;
    const int len = length();
    for (int t = 0; t < len; ++t)
      r.terms.push_back(uniform01(rng) < spec.event_noise
                            ? synthetic_term(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(vocab))))
                            : out.event_terms[uniform_index(rng, out.event_terms.size())]);
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace semscan
