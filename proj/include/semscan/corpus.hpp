#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "semscan/error.hpp"

namespace semscan {

using TermId = std::int32_t;

// ---------------------------------------------------------------------------
// Calendar days
// ---------------------------------------------------------------------------

/// Days since 1970-01-01 for a proleptic Gregorian date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
  std::int64_t year;
  unsigned month;
  unsigned day;
};

constexpr CivilDate civil_from_days(std::int64_t z) noexcept {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2), m, d};
}

/// Parses `YYYY-MM-DD` into days since 1970-01-01; nullopt when invalid.
inline std::optional<std::int64_t> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (ec != std::errc{} || ptr != s.data() + pos + len) return std::nullopt;
    return v;
  };
  auto y = field(0, 4), m = field(5, 2), d = field(8, 2);
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1) return std::nullopt;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (*y % 4 == 0 && *y % 100 != 0) || *y % 400 == 0;
  const int limit = kDays[*m - 1] + (*m == 2 && leap ? 1 : 0);
  if (*d > limit) return std::nullopt;
  return days_from_civil(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d));
}

inline std::string format_date(std::int64_t days) {
  const CivilDate c = civil_from_days(days);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u", static_cast<long long>(c.year), c.month, c.day);
  return buf;
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

/// Lowercases and splits on every non-alphanumeric byte. No stemming and no
/// stop-word removal.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Terms must be distinct; their order defines the indices.
  explicit Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
    index_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (!index_.emplace(terms_[i], static_cast<TermId>(i)).second)
        throw DataError("duplicate vocabulary term '" + terms_[i] + "'");
    }
  }

  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }

  std::optional<TermId> find(std::string_view term) const {
    auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& term(TermId id) const { return terms_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> index_;
};

// ---------------------------------------------------------------------------
// Locations
// ---------------------------------------------------------------------------

struct Location {
  std::string id;
  double x = 0.0;
  double y = 0.0;
};

/// Every location's full ascending-distance ordering of all locations.
/// Ties break by ascending index, and row i always starts with i itself.
class NeighborOrder {
 public:
  NeighborOrder() = default;

  /// Rows must each be a permutation of 0..n-1 starting with their own index.
  NeighborOrder(std::size_t n, std::vector<int> flat) : n_(n), order_(std::move(flat)) {
    if (order_.size() != n_ * n_) throw DataError("neighbor order has wrong size");
  }

  std::size_t size() const noexcept { return n_; }

  std::span<const int> row(std::size_t center) const { return {order_.data() + center * n_, n_}; }

 private:
  std::size_t n_ = 0;
  std::vector<int> order_;
};

inline NeighborOrder neighbor_order(std::span<const Location> locations) {
  const std::size_t n = locations.size();
  if (n == 0) throw DataError("neighbor order needs at least one location");
  std::vector<int> flat(n * n);
  std::vector<double> dist(n);
  for (std::size_t c = 0; c < n; ++c) {
    // Squared distances: no sqrt rounding to merge distinct distances.
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = locations[c].x - locations[j].x;
      const double dy = locations[c].y - locations[j].y;
      dist[j] = dx * dx + dy * dy;
    }
    auto row = flat.begin() + static_cast<std::ptrdiff_t>(c * n);
    std::iota(row, row + static_cast<std::ptrdiff_t>(n), 0);
    const int self = static_cast<int>(c);
    std::stable_sort(row, row + static_cast<std::ptrdiff_t>(n), [&](int a, int b) {
      if (a == self) return b != self;
      if (b == self) return false;
      return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
    });
  }
  return NeighborOrder(n, std::move(flat));
}

class LocationTable {
 public:
  LocationTable() = default;

  explicit LocationTable(std::vector<Location> locations) : locations_(std::move(locations)) {
    if (locations_.empty()) throw DataError("location table is empty");
    for (std::size_t i = 0; i < locations_.size(); ++i) {
      const auto& loc = locations_[i];
      if (!std::isfinite(loc.x) || !std::isfinite(loc.y))
        throw DataError("location '" + loc.id + "' has non-finite coordinates");
      if (!index_.emplace(loc.id, static_cast<int>(i)).second)
        throw DataError("duplicate location id '" + loc.id + "'");
    }
    order_ = neighbor_order(locations_);
  }

  std::size_t size() const noexcept { return locations_.size(); }
  const Location& operator[](std::size_t i) const { return locations_[i]; }
  const std::vector<Location>& locations() const noexcept { return locations_; }
  const NeighborOrder& neighbors() const noexcept { return order_; }

  std::optional<int> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  double distance(std::size_t a, std::size_t b) const {
    return std::hypot(locations_[a].x - locations_[b].x, locations_[a].y - locations_[b].y);
  }

 private:
  std::vector<Location> locations_;
  std::unordered_map<std::string, int> index_;
  NeighborOrder order_;
};

/// Reads a `id,x,y` CSV with header.
inline LocationTable load_locations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open location table: " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<Location> locations;
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    for (std::size_t pos; (pos = view.find(',', start)) != std::string_view::npos; start = pos + 1)
      cols.push_back(trim(view.substr(start, pos - start)));
    cols.push_back(trim(view.substr(start)));
    if (line_no == 1) {
      if (cols.size() != 3 || cols[0] != "id" || cols[1] != "x" || cols[2] != "y")
        throw DataError(path + ": expected header 'id,x,y'");
      continue;
    }
    if (cols.size() != 3)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 3 columns");
    Location loc;
    loc.id = std::string(cols[0]);
    try {
      std::size_t used = 0;
      loc.x = std::stod(std::string(cols[1]), &used);
      if (used != cols[1].size()) throw std::invalid_argument("x");
      loc.y = std::stod(std::string(cols[2]), &used);
      if (used != cols[2].size()) throw std::invalid_argument("y");
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad coordinate");
    }
    locations.push_back(std::move(loc));
  }
  if (line_no == 0) throw DataError(path + ": empty location table");
  return LocationTable(std::move(locations));
}

// ---------------------------------------------------------------------------
// Records and documents
// ---------------------------------------------------------------------------

/// A tokenized record with resolved day and location, before vocabulary
/// encoding. Terms are kept as strings so that the vocabulary can be
/// rebuilt from any partition.
struct Record {
  std::string id;
  int day = 0;       // days since corpus epoch
  int location = 0;  // index into the location table
  std::vector<std::string> terms;
  std::optional<std::string> label;
};

struct Document {
  std::string id;
  int day = 0;
  int location = 0;
  std::vector<TermId> tokens;
  std::optional<std::string> label;
};

/// Vocabulary of every term that occurs at least `min_count` times across
/// the given records, in lexicographic order.
inline Vocabulary build_vocabulary(std::span<const Record> records, int min_count = 1) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::map<std::string, long> counts;
  for (const auto& r : records)
    for (const auto& t : r.terms) ++counts[t];
  std::vector<std::string> terms;
  for (auto& [term, count] : counts)
    if (count >= min_count) terms.push_back(term);
  if (terms.empty()) throw DataError("vocabulary is empty");
  return Vocabulary(std::move(terms));
}

struct EncodeStats {
  std::size_t kept_tokens = 0;
  std::size_t dropped_tokens = 0;
};

/// Encodes one record; out-of-vocabulary terms are dropped.
inline Document encode(const Record& r, const Vocabulary& vocab, EncodeStats* stats = nullptr) {
  Document d{r.id, r.day, r.location, {}, r.label};
  d.tokens.reserve(r.terms.size());
  for (const auto& t : r.terms) {
    if (auto id = vocab.find(t)) {
      d.tokens.push_back(*id);
      if (stats) ++stats->kept_tokens;
    } else if (stats) {
      ++stats->dropped_tokens;
    }
  }
  return d;
}

inline std::vector<Document> encode(std::span<const Record> records, const Vocabulary& vocab,
                                    EncodeStats* stats = nullptr) {
  std::vector<Document> docs;
  docs.reserve(records.size());
  for (const auto& r : records) docs.push_back(encode(r, vocab, stats));
  return docs;
}

/// Records read from a JSON-lines file.
struct RecordSet {
  std::vector<Record> records;
  std::int64_t epoch = 0;  // civil day of day index 0
  std::size_t rejected = 0;
};

/// Reads JSON-lines records. Day indices are relative to `epoch` when given,
/// otherwise to the earliest date in the file. Records whose location is not
/// in the table are skipped and tallied; any malformed line is a hard error.
inline RecordSet load_records(const std::string& path, const LocationTable& locations,
                              std::optional<std::int64_t> epoch = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open records file: " + path);

  struct Raw {
    Record rec;
    std::int64_t civil;
  };
  std::vector<Raw> raws;
  RecordSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw DataError(where + "expected a JSON object");
    auto str_field = [&](const char* key) -> std::string {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_string())
        throw DataError(where + "missing or non-string field '" + key + "'");
      return it->get<std::string>();
    };
    Raw raw;
    raw.rec.id = str_field("id");
    const std::string date = str_field("date");
    const auto civil = parse_date(date);
    if (!civil) throw DataError(where + "unparseable date '" + date + "'");
    raw.civil = *civil;
    const std::string loc = str_field("location");
    raw.rec.terms = tokenize(str_field("text"));
    if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw DataError(where + "non-string field 'label'");
      raw.rec.label = it->get<std::string>();
    }
    const auto loc_index = locations.find(loc);
    if (!loc_index) {
      ++out.rejected;
      continue;
    }
    raw.rec.location = *loc_index;
    raws.push_back(std::move(raw));
  }

  if (epoch) {
    out.epoch = *epoch;
  } else if (!raws.empty()) {
    out.epoch = std::min_element(raws.begin(), raws.end(), [](const Raw& a, const Raw& b) {
                  return a.civil < b.civil;
                })->civil;
  }
  out.records.reserve(raws.size());
  for (auto& raw : raws) {
    if (raw.civil < out.epoch)
      throw DataError(path + ": record '" + raw.rec.id + "' precedes the corpus epoch");
    raw.rec.day = static_cast<int>(raw.civil - out.epoch);
    out.records.push_back(std::move(raw.rec));
  }
  return out;
}

struct CorpusOptions {
  // Records with day index below this form the background partition; when
  // unset every record is background.
  std::optional<int> background_end_day;
  int min_count = 1;
  std::optional<std::int64_t> epoch;
};

struct Corpus {
  std::vector<Record> records;
  std::vector<Document> documents;  // parallel to `records`
  Vocabulary vocabulary;
  std::int64_t epoch = 0;
  int background_end_day = 0;
  std::size_t rejected = 0;
  EncodeStats encode_stats;
};

/// Loads records and encodes them against a vocabulary built from the
/// background partition only.
inline Corpus load_corpus(const std::string& records_path, const LocationTable& locations,
                          const CorpusOptions& options = {}) {
  RecordSet set = load_records(records_path, locations, options.epoch);
  Corpus corpus;
  corpus.epoch = set.epoch;
  corpus.rejected = set.rejected;
  corpus.records = std::move(set.records);
  int last_day = 0;
  for (const auto& r : corpus.records) last_day = std::max(last_day, r.day);
  corpus.background_end_day = options.background_end_day.value_or(last_day + 1);

  std::vector<Record> background;
  for (const auto& r : corpus.records)
    if (r.day < corpus.background_end_day) background.push_back(r);
  corpus.vocabulary = build_vocabulary(background, options.min_count);
  corpus.documents = encode(corpus.records, corpus.vocabulary, &corpus.encode_stats);
  return corpus;
}

}  // namespace semscan
