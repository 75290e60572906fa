#pragma once

// Small corpora shared by the unit tests and the acceptance suite.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "semscan/corpus.hpp"
#include "semscan/lda.hpp"
#include "semscan/random.hpp"

namespace semscan::fixture {

// Builds documents from space-separated term strings over a fixed
// vocabulary; every document lands on day 0, location 0 unless set later.
inline std::vector<Document> docs(const Vocabulary& vocab, const std::vector<std::string>& texts) {
  std::vector<Document> out;
  for (const auto& t : texts) {
    Record r{"d" + std::to_string(out.size()), 0, 0, tokenize(t), std::nullopt};
    out.push_back(encode(r, vocab));
  }
  return out;
}

// 100 documents over 12 terms drawn from three overlapping word groups.
inline std::vector<Document> hundred_documents(std::uint64_t seed = 7) {
  Rng rng(seed);
  std::vector<Document> out;
  for (int d = 0; d < 100; ++d) {
    Document doc;
    doc.id = "f" + std::to_string(d);
    const int group = static_cast<int>(uniform_index(rng, 3));
    const int len = 3 + static_cast<int>(uniform_index(rng, 6));
    for (int i = 0; i < len; ++i) doc.tokens.push_back(static_cast<TermId>(group * 4 + uniform_index(rng, 6)) % 12);
    out.push_back(std::move(doc));
  }
  return out;
}

// A normalized random topic set with strictly positive entries.
inline TopicSet random_topics(std::size_t topics, std::size_t vocab, std::uint64_t seed) {
  Rng rng(seed);
  TopicSet t(topics, vocab);
  for (std::size_t k = 0; k < topics; ++k) {
    double sum = 0.0;
    for (std::size_t w = 0; w < vocab; ++w) sum += (t(k, w) = 0.05 + uniform01(rng));
    for (std::size_t w = 0; w < vocab; ++w) t(k, w) /= sum;
  }
  return t;
}

inline double hellinger_raw(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (std::sqrt(p[i]) - std::sqrt(q[i])) * (std::sqrt(p[i]) - std::sqrt(q[i]));
  return std::sqrt(s / 2.0);
}

}  // namespace semscan::fixture
