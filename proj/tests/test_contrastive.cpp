#include <catch_amalgamated.hpp>

#include <cstring>
#include <numeric>

#include "fixtures.hpp"
#include "semscan/contrastive.hpp"
#include "semscan/log.hpp"

using namespace semscan;

namespace {

// Four topics over 40 terms; topic g owns terms 10g..10g+9 with Zipf weights.
struct Blocks {
  static constexpr int kTopics = 4;
  static constexpr int kWords = 10;
  static constexpr std::size_t kVocab = kTopics * kWords;

  static Document draw(Rng& rng, int id, int topic, int len) {
    std::vector<double> zipf(kWords);
    double total = 0.0;
    for (int j = 0; j < kWords; ++j) total += (zipf[static_cast<std::size_t>(j)] = 1.0 / (j + 1));
    Document d;
    d.id = "b" + std::to_string(id);
    for (int i = 0; i < len; ++i)
      d.tokens.push_back(static_cast<TermId>(topic * kWords + static_cast<int>(sample_weighted(rng, zipf, total))));
    return d;
  }

  // Planted documents mix the rarest term of three different topics.
  static constexpr TermId kPlanted[3] = {9, 19, 29};

  static Document planted(Rng& rng, int id, int len) {
    Document d;
    d.id = "p" + std::to_string(id);
    for (int i = 0; i < len; ++i) d.tokens.push_back(kPlanted[uniform_index(rng, 3)]);
    return d;
  }

  static std::vector<Document> background(std::uint64_t seed, int n) {
    Rng rng(seed);
    std::vector<Document> out;
    for (int i = 0; i < n; ++i)
      out.push_back(draw(rng, i, static_cast<int>(uniform_index(rng, kTopics)), 5 + static_cast<int>(uniform_index(rng, 4))));
    return out;
  }
};

TopicSet learn_frozen(std::span<const Document> docs, std::size_t topics, std::uint64_t seed, int sweeps = 100) {
  LdaParams p;
  p.topics = topics;
  p.sweeps = sweeps;
  p.seed = seed;
  TopicSet t = fit_lda(docs, Blocks::kVocab, p).topics;
  t.freeze_all();
  return t;
}

double best_match(const TopicSet& topics, std::size_t first, std::size_t count, const std::vector<double>& target) {
  double best = 1.0;
  for (std::size_t k = first; k < first + count; ++k) best = std::min(best, fixture::hellinger_raw(topics.row(k), target));
  return best;
}

}  // namespace

TEST_CASE("initial draws are proportional to phi", "[contrastive]") {
  TopicSet combined(2, 1);
  combined(0, 0) = 0.9;
  combined(1, 0) = 0.1;
  std::vector<Document> window{{"w", 0, 0, std::vector<TermId>(10000, 0), std::nullopt}};
  const GibbsState s = init_assignments(window, combined, 0.5, 1.0, 123);
  const double freq = static_cast<double>(s.n_k[0]) / 10000.0;
  CHECK(std::abs(freq - 0.9) <= 0.01);
  CHECK_FALSE(audit_counts(s));
  // Same seed, same state.
  CHECK(init_assignments(window, combined, 0.5, 1.0, 123).z == s.z);
}

TEST_CASE("refit leaves frozen rows bit-identical", "[contrastive]") {
  const auto bg_docs = Blocks::background(1, 150);
  const TopicSet background = learn_frozen(bg_docs, 4, 2, 30);
  const auto window = Blocks::background(3, 40);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RefitParams p;
    p.sweeps = 10;
    p.seed = seed;
    const TopicSet fg = fixture::random_topics(3, Blocks::kVocab, seed);
    const RefitResult r = refit_foreground(window, background, fg, p);
    REQUIRE(r.topics.num_topics() == 7);
    CHECK(r.topics.num_frozen() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto a = background.row(k), b = r.topics.row(k);
      CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    }
  }
}

TEST_CASE("refit keeps count tables consistent after every sweep", "[contrastive][property]") {
  const auto docs = fixture::hundred_documents(3);
  TopicSet background = fixture::random_topics(3, 12, 5);
  background.freeze_all();
  RefitParams p;
  p.sweeps = 20;
  p.seed = 8;
  std::size_t tokens = 0;
  for (const auto& d : docs) tokens += d.tokens.size();
  int sweeps = 0;
  refit_foreground(docs, background, fixture::random_topics(2, 12, 6), p, [&](int, const GibbsState& s) {
    ++sweeps;
    REQUIRE_FALSE(audit_counts(s));
    CHECK(static_cast<std::size_t>(std::accumulate(s.n_k.begin(), s.n_k.end(), 0L)) == tokens);
  });
  CHECK(sweeps == 20);
}

TEST_CASE("an emerging word dominates a free topic", "[contrastive]") {
  const Vocabulary vocab({"a", "b", "c"});
  std::vector<std::string> bg_texts(40, "a b");
  const auto bg_docs = fixture::docs(vocab, bg_texts);
  LdaParams lp;
  lp.topics = 1;
  lp.sweeps = 20;
  TopicSet background = fit_lda(bg_docs, 3, lp).topics;
  background.freeze_all();

  std::vector<std::string> window_texts;
  for (int i = 0; i < 20; ++i) window_texts.push_back(i % 2 ? "a b" : "c c c");
  const auto window = fixture::docs(vocab, window_texts);
  DetectionWindowParams p;
  p.foreground_topics = 2;
  p.init_sweeps = 50;
  p.refit_sweeps = 50;
  p.seed = 4;
  const DetectionTopics out = fit_detection_window(window, background, p);
  double best = 0.0;
  for (std::size_t k = 1; k < out.combined.num_topics(); ++k) best = std::max(best, out.combined(k, 2));
  CHECK(best > 0.8);
}

TEST_CASE("a window like the background mostly stays on frozen topics", "[contrastive]") {
  const auto bg_docs = Blocks::background(10, 300);
  const TopicSet background = learn_frozen(bg_docs, 4, 11);
  double total = 0.0;
  int under_half = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto window = Blocks::background(100 + seed, 60);
    DetectionWindowParams p;
    p.foreground_topics = 4;
    p.init_sweeps = 50;
    p.refit_sweeps = 50;
    p.seed = seed;
    const double frac = fit_detection_window(window, background, p).foreground_token_fraction;
    total += frac;
    under_half += frac < 0.5 ? 1 : 0;
  }
  CHECK(total / 20.0 < 0.5);
  CHECK(under_half >= 18);
}

TEST_CASE("refit moves a free topic toward a planted pattern", "[contrastive]") {
  const auto bg_docs = Blocks::background(20, 300);
  const TopicSet background = learn_frozen(bg_docs, 4, 21);
  std::vector<double> planted(Blocks::kVocab, 0.0);
  for (TermId w : Blocks::kPlanted) planted[static_cast<std::size_t>(w)] = 1.0 / 3.0;

  int improved = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(seed, 77));
    auto window = Blocks::background(200 + seed, 60);
    for (int i = 0; i < 20; ++i) window.push_back(Blocks::planted(rng, i, 5));
    DetectionWindowParams p;
    p.foreground_topics = 3;
    p.init_sweeps = 100;
    p.refit_sweeps = 100;
    p.seed = seed;
    const DetectionTopics out = fit_detection_window(window, background, p);
    const double before = best_match(out.initial, 0, 3, planted);
    const double after = best_match(out.combined, 4, 3, planted);
    improved += after < before ? 1 : 0;
  }
  CHECK(improved >= 16);
}

TEST_CASE("detection window shape and default alpha", "[contrastive]") {
  const auto docs = fixture::hundred_documents(4);
  TopicSet background = fixture::random_topics(25, 12, 1);
  background.freeze_all();
  DetectionWindowParams p;
  p.foreground_topics = 25;
  p.init_sweeps = 2;
  p.refit_sweeps = 2;
  p.seed = 3;
  const DetectionTopics a = fit_detection_window(docs, background, p);
  CHECK(a.combined.num_topics() == 50);
  CHECK(a.combined.num_frozen() == 25);
  for (std::size_t k = 0; k < 50; ++k) CHECK(a.combined.frozen(k) == (k < 25));
  CHECK(fit_detection_window(docs, background, p).combined == a.combined);

  RefitParams rp;
  rp.sweeps = 1;
  const RefitResult r = refit_foreground(docs, background, a.initial, rp);
  CHECK(r.state.alpha == 1.0 / 50.0);
}

TEST_CASE("refit rejects an empty window", "[contrastive]") {
  TopicSet background = fixture::random_topics(2, 4, 1);
  background.freeze_all();
  CHECK_THROWS_WITH(refit_foreground(std::vector<Document>{}, background, fixture::random_topics(1, 4, 2), {}),
                    Catch::Matchers::ContainsSubstring("no foreground documents"));
}
