#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "semscan/corpus.hpp"
#include "semscan/error.hpp"
#include "semscan/lda.hpp"

namespace semscan {

struct AssignParams {
  std::optional<double> alpha;  // default 1/T over the combined topic set
  int max_iters = 100;
  double tol = 1e-6;
};

struct Assignment {
  int topic = 0;
  std::vector<double> theta;
  bool is_foreground = false;
  bool degenerate = false;  // no in-vocabulary tokens
  int iterations = 0;
};

/// EM-style assignment of a whole document to a single topic with the
/// topics held fixed. theta starts uniform over all topics; each iteration
/// computes per-token responsibilities proportional to phi_k(w) theta(k),
/// then sets theta(k) proportional to alpha plus the summed
/// responsibilities. Stops once no entry of theta moves by tol or more.
/// The result is the argmax of theta, lowest index on ties. Deterministic.
inline Assignment assign_document(const Document& doc, const TopicSet& topics, const AssignParams& params = {}) {
  const std::size_t T = topics.num_topics();
  if (T == 0) throw ConfigError("cannot assign against an empty topic set");
  const double alpha = params.alpha.value_or(1.0 / static_cast<double>(T));
  const std::size_t K = topics.num_frozen();

  Assignment out;
  out.theta.assign(T, 1.0 / static_cast<double>(T));

  // Distinct terms with multiplicities, in term order.
  std::vector<TermId> terms(doc.tokens);
  std::sort(terms.begin(), terms.end());
  std::vector<std::pair<TermId, double>> bag;
  for (TermId w : terms) {
    if (w < 0 || static_cast<std::size_t>(w) >= topics.vocab_size())
      throw DataError("document '" + doc.id + "' has a token outside the vocabulary");
    if (!bag.empty() && bag.back().first == w)
      bag.back().second += 1.0;
    else
      bag.emplace_back(w, 1.0);
  }
  if (bag.empty()) {
    out.degenerate = true;
    out.topic = 0;
    out.is_foreground = K == 0;
    return out;
  }

  std::vector<double> phi(bag.size() * T);
  for (std::size_t u = 0; u < bag.size(); ++u)
    for (std::size_t k = 0; k < T; ++k) phi[u * T + k] = topics(k, static_cast<std::size_t>(bag[u].first));

  std::vector<double> resp(T), acc(T), next(T);
  for (int iter = 1; iter <= params.max_iters; ++iter) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t u = 0; u < bag.size(); ++u) {
      const double* row = phi.data() + u * T;
      double norm = 0.0;
      for (std::size_t k = 0; k < T; ++k) norm += (resp[k] = row[k] * out.theta[k]);
      const double scale = bag[u].second / norm;
      for (std::size_t k = 0; k < T; ++k) acc[k] += resp[k] * scale;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < T; ++k) total += (next[k] = alpha + acc[k]);
    double delta = 0.0;
    for (std::size_t k = 0; k < T; ++k) {
      next[k] /= total;
      delta = std::max(delta, std::abs(next[k] - out.theta[k]));
    }
    out.theta.swap(next);
    out.iterations = iter;
    if (delta < params.tol) break;
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < T; ++k)
    if (out.theta[k] > out.theta[best]) best = k;
  out.topic = static_cast<int>(best);
  out.is_foreground = best >= K;
  return out;
}

struct AssignedDocument {
  std::size_t index = 0;  // position in the input document list
  int day = 0;
  int location = 0;
  Assignment assignment;

  int topic() const noexcept { return assignment.topic; }
  bool is_foreground() const noexcept { return assignment.is_foreground; }
};

/// Assigns every document, optionally across worker threads. Output order
/// matches input order and is identical for any thread count.
inline std::vector<AssignedDocument> assign_documents(std::span<const Document> docs,
                                                      std::span<const std::size_t> indices, const TopicSet& topics,
                                                      const AssignParams& params = {}, unsigned threads = 1) {
  std::vector<AssignedDocument> out(indices.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const Document& d = docs[indices[j]];
      out[j] = {indices[j], d.day, d.location, assign_document(d, topics, params)};
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(indices.size())));
  if (threads <= 1) {
    work(0, indices.size());
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (indices.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk, end = std::min(indices.size(), begin + chunk);
    if (begin < end) pool.emplace_back(work, begin, end);
  }
  pool.clear();
  return out;
}

/// Assigns every document whose day lies in
/// [detection_day - span_days + 1, detection_day]: the detection window
/// together with the baseline days before it.
inline std::vector<AssignedDocument> assign_corpus_window(std::span<const Document> docs, const TopicSet& topics,
                                                          int detection_day, int span_days,
                                                          const AssignParams& params = {}, unsigned threads = 1) {
  if (span_days < 1) throw ConfigError("assignment span must be >= 1 day");
  const int first = detection_day - span_days + 1;
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < docs.size(); ++i)
    if (docs[i].day >= first && docs[i].day <= detection_day) indices.push_back(i);
  return assign_documents(docs, indices, topics, params, threads);
}

}  // namespace semscan
