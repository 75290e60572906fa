#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "semscan/corpus.hpp"
#include "semscan/error.hpp"
#include "semscan/lda.hpp"
#include "semscan/random.hpp"

namespace semscan {

/// Background rows (frozen) followed by foreground rows (free).
inline TopicSet combine_topics(const TopicSet& background, const TopicSet& foreground) {
  if (background.vocab_size() != foreground.vocab_size())
    throw Error("background and foreground topics disagree on vocabulary size");
  TopicSet combined(0, background.vocab_size());
  combined.append(background, 0, background.num_topics());
  combined.append(foreground, 0, foreground.num_topics());
  for (std::size_t k = 0; k < background.num_topics(); ++k) combined.set_frozen(k, true);
  for (std::size_t k = background.num_topics(); k < combined.num_topics(); ++k) combined.set_frozen(k, false);
  return combined;
}

/// Seeds a chain over the combined topic set: each token w gets topic k with
/// probability proportional to phi_k(w). Counts follow from the draws.
inline GibbsState init_assignments(std::span<const Document> window, const TopicSet& combined, double alpha,
                                   double beta, std::uint64_t seed) {
  const std::size_t T = combined.num_topics(), V = combined.vocab_size();
  GibbsState s(window, T, V, alpha, beta, seed);
  Rng rng(seed);
  std::vector<double> weights(T);
  for (std::size_t d = 0; d < s.num_documents(); ++d) {
    for (std::size_t i = 0; i < s.tokens[d].size(); ++i) {
      const auto w = static_cast<std::size_t>(s.tokens[d][i]);
      double total = 0.0;
      for (std::size_t k = 0; k < T; ++k) total += (weights[k] = combined(k, w));
      s.assign(d, i, static_cast<int>(sample_weighted(rng, weights, total)));
    }
  }
  return s;
}

struct RefitParams {
  std::optional<double> alpha;  // default 1/(K+K')
  std::optional<double> beta;   // default 1/|V|
  int sweeps = 500;
  std::uint64_t seed = 0;
};

struct RefitResult {
  TopicSet topics;  // K frozen rows copied verbatim, then K' refit rows
  GibbsState state;

  // Fraction of window tokens currently assigned to free topics.
  double foreground_token_fraction() const {
    const std::size_t total = state.total_tokens();
    if (total == 0) return 0.0;
    long fg = 0;
    for (std::size_t k = 0; k < topics.num_topics(); ++k)
      if (!topics.frozen(k)) fg += state.n_k[k];
    return static_cast<double>(fg) / static_cast<double>(total);
  }
};

/// Contrastive refit over the combined K + K' topic set. Each token is
/// resampled with probability proportional to phi_k(w) theta_d(k), theta
/// coming from the document counts of all topics. Only free topics have
/// their phi re-estimated from counts; frozen rows are read from
/// `background` and returned unchanged.
inline RefitResult refit_foreground(std::span<const Document> window, const TopicSet& background,
                                    const TopicSet& fg_init, const RefitParams& params,
                                    const SweepObserver& observer = {}) {
  if (window.empty()) throw DataError("no foreground documents");
  if (params.sweeps < 1) throw ConfigError("sweep count must be >= 1");
  TopicSet combined = combine_topics(background, fg_init);
  const std::size_t T = combined.num_topics(), V = combined.vocab_size();
  const std::size_t K = background.num_topics();
  const double alpha = params.alpha.value_or(1.0 / static_cast<double>(T));
  const double beta = params.beta.value_or(1.0 / static_cast<double>(V));
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("alpha and beta must be positive");
  detail::warn_empty_documents(window, "refit_foreground");

  GibbsState s = init_assignments(window, combined, alpha, beta, params.seed);
  // Independent stream so that the sampling sweeps do not replay the
  // initialization draws.
  Rng rng(mix_seed(params.seed, 1));

  // Frozen phi, word-major.
  std::vector<double> frozen_wk(V * K);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t w = 0; w < V; ++w) frozen_wk[w * K + k] = background(k, w);

  const double vbeta = static_cast<double>(V) * beta;
  std::vector<double> weights(T);
  for (int sweep = 1; sweep <= params.sweeps; ++sweep) {
    for (std::size_t d = 0; d < s.num_documents(); ++d) {
      const int* ndk = s.n_dk.data() + d * T;
      for (std::size_t i = 0; i < s.tokens[d].size(); ++i) {
        s.unassign(d, i);
        const auto w = static_cast<std::size_t>(s.tokens[d][i]);
        const double* fixed = frozen_wk.data() + w * K;
        const int* nwk = s.n_wk.data() + w * T;
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) total += (weights[k] = fixed[k] * (ndk[k] + alpha));
        for (std::size_t k = K; k < T; ++k)
          total += (weights[k] = (nwk[k] + beta) / (s.n_k[k] + vbeta) * (ndk[k] + alpha));
        s.assign(d, i, static_cast<int>(sample_weighted(rng, weights, total)));
      }
    }
    if (observer) observer(sweep, s);
  }

  TopicSet out(0, V);
  out.append(background, 0, K);
  for (std::size_t k = 0; k < K; ++k) out.set_frozen(k, true);
  const TopicSet refit = estimate_phi(s);
  out.append(refit, K, T - K);
  for (std::size_t k = K; k < T; ++k) out.set_frozen(k, false);
  return {std::move(out), std::move(s)};
}

struct DetectionWindowParams {
  std::size_t foreground_topics = 25;
  std::optional<double> alpha;  // refit default 1/(K+K'); the initial fit uses 1/K'
  std::optional<double> beta;   // default 1/|V|
  int init_sweeps = 500;
  int refit_sweeps = 500;
  std::uint64_t seed = 0;
};

struct DetectionTopics {
  TopicSet combined;  // K frozen + K' refit foreground
  TopicSet initial;   // K' foreground topics from plain LDA on the window
  double foreground_token_fraction = 0.0;
};

/// Plain LDA with K' topics on the window, then the contrastive refit
/// against the frozen background.
inline DetectionTopics fit_detection_window(std::span<const Document> window, const TopicSet& background,
                                            const DetectionWindowParams& params) {
  if (window.empty()) throw DataError("no foreground documents");
  LdaParams lda;
  lda.topics = params.foreground_topics;
  lda.beta = params.beta;
  lda.sweeps = params.init_sweeps;
  lda.seed = mix_seed(params.seed, 0);
  LdaFit initial = fit_lda(window, background.vocab_size(), lda);

  RefitParams refit;
  refit.alpha = params.alpha;
  refit.beta = params.beta;
  refit.sweeps = params.refit_sweeps;
  refit.seed = mix_seed(params.seed, 1);
  RefitResult result = refit_foreground(window, background, initial.topics, refit);
  const double frac = result.foreground_token_fraction();
  return {std::move(result.topics), std::move(initial.topics), frac};
}

}  // namespace semscan
