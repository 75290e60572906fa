#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semscan/corpus.hpp"
#include "semscan/error.hpp"
#include "semscan/log.hpp"
#include "semscan/random.hpp"

namespace semscan {

/// Word distributions for a set of topics over a shared vocabulary.
/// Frozen topics (background) always precede free topics (foreground).
class TopicSet {
 public:
  TopicSet() = default;

  TopicSet(std::size_t num_topics, std::size_t vocab_size)
      : vocab_size_(vocab_size), phi_(num_topics * vocab_size, 0.0), frozen_(num_topics, 0) {}

  std::size_t num_topics() const noexcept { return frozen_.size(); }
  std::size_t vocab_size() const noexcept { return vocab_size_; }

  std::size_t num_frozen() const noexcept {
    std::size_t n = 0;
    for (char f : frozen_) n += f ? 1 : 0;
    return n;
  }
  std::size_t num_free() const noexcept { return num_topics() - num_frozen(); }

  bool frozen(std::size_t k) const { return frozen_[k] != 0; }
  void set_frozen(std::size_t k, bool f) { frozen_[k] = f ? 1 : 0; }
  void freeze_all() { std::fill(frozen_.begin(), frozen_.end(), 1); }

  double operator()(std::size_t k, std::size_t w) const { return phi_[k * vocab_size_ + w]; }
  double& operator()(std::size_t k, std::size_t w) { return phi_[k * vocab_size_ + w]; }

  std::span<const double> row(std::size_t k) const { return {phi_.data() + k * vocab_size_, vocab_size_}; }
  std::span<double> row(std::size_t k) { return {phi_.data() + k * vocab_size_, vocab_size_}; }

  /// Copies rows [first, first + count) of `other` onto the end of this set.
  void append(const TopicSet& other, std::size_t first, std::size_t count) {
    if (other.vocab_size_ != vocab_size_) throw Error("topic sets disagree on vocabulary size");
    for (std::size_t k = first; k < first + count; ++k) {
      auto r = other.row(k);
      phi_.insert(phi_.end(), r.begin(), r.end());
      frozen_.push_back(other.frozen_[k]);
    }
  }

  /// Indices of the `n` highest-probability terms of topic k, ties by index.
  std::vector<TermId> top_terms(std::size_t k, std::size_t n) const {
    std::vector<TermId> idx(vocab_size_);
    for (std::size_t w = 0; w < vocab_size_; ++w) idx[w] = static_cast<TermId>(w);
    n = std::min(n, idx.size());
    auto r = row(k);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                      [&](TermId a, TermId b) {
                        if (r[static_cast<std::size_t>(a)] != r[static_cast<std::size_t>(b)])
                          return r[static_cast<std::size_t>(a)] > r[static_cast<std::size_t>(b)];
                        return a < b;
                      });
    idx.resize(n);
    return idx;
  }

  friend bool operator==(const TopicSet&, const TopicSet&) = default;

 private:
  std::size_t vocab_size_ = 0;
  std::vector<double> phi_;  // topic-major
  std::vector<char> frozen_;
};

/// Token-level topic assignments and the four count tables of a collapsed
/// Gibbs chain. The topic-word table is stored word-major so that the
/// per-token conditional reads one contiguous row.
struct GibbsState {
  std::size_t num_topics = 0;
  std::size_t vocab_size = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;

  std::vector<std::vector<TermId>> tokens;  // per document
  std::vector<std::vector<int>> z;          // per document, per token
  std::vector<int> n_wk;                    // vocab_size x num_topics
  std::vector<int> n_k;
  std::vector<int> n_dk;                    // documents x num_topics
  std::vector<int> n_d;

  GibbsState() = default;

  GibbsState(std::span<const Document> docs, std::size_t topics, std::size_t vocab, double a, double b,
             std::uint64_t s)
      : num_topics(topics), vocab_size(vocab), alpha(a), beta(b), seed(s),
        n_wk(vocab * topics, 0), n_k(topics, 0), n_dk(docs.size() * topics, 0), n_d(docs.size(), 0) {
    tokens.reserve(docs.size());
    z.reserve(docs.size());
    for (const auto& d : docs) {
      for (TermId w : d.tokens)
        if (w < 0 || static_cast<std::size_t>(w) >= vocab)
          throw DataError("document '" + d.id + "' has a token outside the vocabulary");
      tokens.push_back(d.tokens);
      z.emplace_back(d.tokens.size(), -1);
    }
  }

  std::size_t num_documents() const noexcept { return tokens.size(); }

  int topic_word(std::size_t k, std::size_t w) const { return n_wk[w * num_topics + k]; }
  int doc_topic(std::size_t d, std::size_t k) const { return n_dk[d * num_topics + k]; }

  void assign(std::size_t d, std::size_t i, int k) {
    z[d][i] = k;
    const auto w = static_cast<std::size_t>(tokens[d][i]);
    const auto ku = static_cast<std::size_t>(k);
    ++n_wk[w * num_topics + ku];
    ++n_k[ku];
    ++n_dk[d * num_topics + ku];
    ++n_d[d];
  }

  void unassign(std::size_t d, std::size_t i) {
    const auto ku = static_cast<std::size_t>(z[d][i]);
    const auto w = static_cast<std::size_t>(tokens[d][i]);
    --n_wk[w * num_topics + ku];
    --n_k[ku];
    --n_dk[d * num_topics + ku];
    --n_d[d];
    z[d][i] = -1;
  }

  std::size_t total_tokens() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tokens) n += t.size();
    return n;
  }
};

/// Checks every count-table identity against the assignments: recounted
/// n_kw and n_dk match, row sums equal n_k and n_d, n_d equals document
/// length, and no count is negative. Returns a description of the first
/// violation, or nullopt.
inline std::optional<std::string> audit_counts(const GibbsState& s) {
  const std::size_t T = s.num_topics, V = s.vocab_size, D = s.num_documents();
  if (s.n_wk.size() != V * T || s.n_k.size() != T || s.n_dk.size() != D * T || s.n_d.size() != D)
    return "count table shape mismatch";
  std::vector<int> wk(V * T, 0), dk(D * T, 0);
  for (std::size_t d = 0; d < D; ++d) {
    if (s.z[d].size() != s.tokens[d].size()) return "assignment length mismatch in document " + std::to_string(d);
    for (std::size_t i = 0; i < s.tokens[d].size(); ++i) {
      const int k = s.z[d][i];
      if (k < 0 || static_cast<std::size_t>(k) >= T) return "unassigned token in document " + std::to_string(d);
      ++wk[static_cast<std::size_t>(s.tokens[d][i]) * T + static_cast<std::size_t>(k)];
      ++dk[d * T + static_cast<std::size_t>(k)];
    }
  }
  if (wk != s.n_wk) return "topic-word counts disagree with assignments";
  if (dk != s.n_dk) return "document-topic counts disagree with assignments";
  for (std::size_t k = 0; k < T; ++k) {
    long sum = 0;
    for (std::size_t w = 0; w < V; ++w) sum += s.n_wk[w * T + k];
    if (sum != s.n_k[k]) return "topic total mismatch for topic " + std::to_string(k);
    if (s.n_k[k] < 0) return "negative topic total";
  }
  for (std::size_t d = 0; d < D; ++d) {
    long sum = 0;
    for (std::size_t k = 0; k < T; ++k) sum += s.n_dk[d * T + k];
    if (sum != s.n_d[d]) return "document total mismatch for document " + std::to_string(d);
    if (static_cast<std::size_t>(s.n_d[d]) != s.tokens[d].size())
      return "document total differs from token count for document " + std::to_string(d);
  }
  return std::nullopt;
}

/// phi_k(w) = (n_kw + beta) / (n_k + |V| beta) for every topic.
inline TopicSet estimate_phi(const GibbsState& s) {
  TopicSet topics(s.num_topics, s.vocab_size);
  const double vbeta = static_cast<double>(s.vocab_size) * s.beta;
  for (std::size_t k = 0; k < s.num_topics; ++k) {
    const double denom = static_cast<double>(s.n_k[k]) + vbeta;
    for (std::size_t w = 0; w < s.vocab_size; ++w)
      topics(k, w) = (static_cast<double>(s.topic_word(k, w)) + s.beta) / denom;
  }
  return topics;
}

/// theta_d(k) = (n_dk + alpha) / (n_d + T alpha).
inline std::vector<double> estimate_theta(const GibbsState& s, std::size_t d) {
  std::vector<double> theta(s.num_topics);
  const double denom = static_cast<double>(s.n_d[d]) + static_cast<double>(s.num_topics) * s.alpha;
  for (std::size_t k = 0; k < s.num_topics; ++k)
    theta[k] = (static_cast<double>(s.doc_topic(d, k)) + s.alpha) / denom;
  return theta;
}

struct LdaParams {
  std::size_t topics = 25;
  std::optional<double> alpha;  // default 1/T
  std::optional<double> beta;   // default 1/|V|
  int sweeps = 500;
  std::uint64_t seed = 0;
};

// Called after each completed sweep with the 1-based sweep number.
using SweepObserver = std::function<void(int sweep, const GibbsState&)>;

struct LdaFit {
  TopicSet topics;
  GibbsState state;
};

namespace detail {

inline void warn_empty_documents(std::span<const Document> docs, std::string_view who) {
  std::size_t empty = 0;
  for (const auto& d : docs) empty += d.tokens.empty() ? 1 : 0;
  if (empty > 0)
    warn(std::string(who) + ": " + std::to_string(empty) + " document(s) with no in-vocabulary tokens ignored");
}

}  // namespace detail

/// Plain LDA by collapsed Gibbs sampling. Initial assignments are uniform
/// over topics; phi is estimated from the final sample.
inline LdaFit fit_lda(std::span<const Document> docs, std::size_t vocab_size, const LdaParams& params,
                      const SweepObserver& observer = {}) {
  if (params.topics < 1) throw ConfigError("topic count must be >= 1");
  if (params.sweeps < 1) throw ConfigError("sweep count must be >= 1");
  if (vocab_size == 0) throw ConfigError("vocabulary is empty");
  if (docs.empty()) throw DataError("cannot fit a topic model to an empty corpus");
  detail::warn_empty_documents(docs, "fit_lda");

  const std::size_t T = params.topics;
  const double alpha = params.alpha.value_or(1.0 / static_cast<double>(T));
  const double beta = params.beta.value_or(1.0 / static_cast<double>(vocab_size));
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("alpha and beta must be positive");

  GibbsState s(docs, T, vocab_size, alpha, beta, params.seed);
  if (s.total_tokens() == 0) throw DataError("corpus has no in-vocabulary tokens");
  Rng rng(params.seed);
  for (std::size_t d = 0; d < s.num_documents(); ++d)
    for (std::size_t i = 0; i < s.tokens[d].size(); ++i)
      s.assign(d, i, static_cast<int>(uniform_index(rng, T)));

  const double vbeta = static_cast<double>(vocab_size) * beta;
  std::vector<double> weights(T);
  for (int sweep = 1; sweep <= params.sweeps; ++sweep) {
    for (std::size_t d = 0; d < s.num_documents(); ++d) {
      const int* ndk = s.n_dk.data() + d * T;
      for (std::size_t i = 0; i < s.tokens[d].size(); ++i) {
        s.unassign(d, i);
        const int* nwk = s.n_wk.data() + static_cast<std::size_t>(s.tokens[d][i]) * T;
        double total = 0.0;
        for (std::size_t k = 0; k < T; ++k) {
          const double p = (nwk[k] + beta) / (s.n_k[k] + vbeta) * (ndk[k] + alpha);
          weights[k] = p;
          total += p;
        }
        s.assign(d, i, static_cast<int>(sample_weighted(rng, weights, total)));
      }
    }
    if (observer) observer(sweep, s);
  }
  TopicSet topics = estimate_phi(s);
  return {std::move(topics), std::move(s)};
}

}  // namespace semscan
