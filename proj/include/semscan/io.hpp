#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <locale>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "semscan/assign.hpp"
#include "semscan/corpus.hpp"
#include "semscan/error.hpp"
#include "semscan/eval.hpp"
#include "semscan/lda.hpp"
#include "semscan/scan.hpp"
#include "semscan/simulate.hpp"

namespace semscan {

// Shortest decimal that round-trips the double exactly.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out.imbue(std::locale::classic());
  return out;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cols;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cols.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cols.push_back(std::move(cur));
  return cols;
}

inline std::string day_label(int day, std::optional<std::int64_t> epoch) {
  return epoch ? format_date(*epoch + day) : std::to_string(day);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Topic sets: CSV matrix plus a JSON sidecar
// ---------------------------------------------------------------------------

struct TopicMeta {
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  int sweeps = 0;
};

inline std::string topic_meta_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

/// Rows are topics (`topic,frozen,<term>...`), columns vocabulary terms.
inline void write_topic_set(const std::string& path, const TopicSet& topics, const Vocabulary& vocab,
                            const TopicMeta& meta) {
  if (vocab.size() != topics.vocab_size()) throw Error("vocabulary size differs from topic set");
  auto out = detail::open_out(path);
  out << "topic,frozen";
  for (const auto& t : vocab.terms()) out << ',' << t;
  out << '\n';
  for (std::size_t k = 0; k < topics.num_topics(); ++k) {
    out << k << ',' << (topics.frozen(k) ? 1 : 0);
    for (double p : topics.row(k)) out << ',' << format_double(p);
    out << '\n';
  }
  nlohmann::json j{{"alpha", meta.alpha},
                   {"beta", meta.beta},
                   {"seed", meta.seed},
                   {"sweeps", meta.sweeps},
                   {"topics", topics.num_topics()},
                   {"vocabulary_size", topics.vocab_size()}};
  auto side = detail::open_out(topic_meta_path(path));
  side << j.dump(2) << '\n';
}

struct LoadedTopics {
  TopicSet topics;
  Vocabulary vocabulary;
  std::optional<TopicMeta> meta;
};

inline LoadedTopics read_topic_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open topic file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty topic file");
  auto header = detail::split_csv(line);
  if (header.size() < 3 || header[0] != "topic" || header[1] != "frozen")
    throw DataError(path + ": expected header 'topic,frozen,<terms>'");
  LoadedTopics out;
  out.vocabulary = Vocabulary(std::vector<std::string>(header.begin() + 2, header.end()));
  const std::size_t V = out.vocabulary.size();
  out.topics = TopicSet(0, V);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cols = detail::split_csv(line);
    if (cols.size() != V + 2) throw DataError(path + ":" + std::to_string(line_no) + ": wrong column count");
    TopicSet row(1, V);
    row.set_frozen(0, cols[1] == "1");
    for (std::size_t w = 0; w < V; ++w) {
      char* end = nullptr;
      row(0, w) = std::strtod(cols[w + 2].c_str(), &end);
      if (end == cols[w + 2].c_str() || *end != '\0')
        throw DataError(path + ":" + std::to_string(line_no) + ": bad probability");
    }
    out.topics.append(row, 0, 1);
  }
  std::ifstream side(topic_meta_path(path));
  if (side) {
    try {
      auto j = nlohmann::json::parse(side);
      out.meta = TopicMeta{j.at("alpha").get<double>(), j.at("beta").get<double>(),
                           j.at("seed").get<std::uint64_t>(), j.at("sweeps").get<int>()};
    } catch (const nlohmann::json::exception& e) {
      throw DataError(topic_meta_path(path) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assignment dump
// ---------------------------------------------------------------------------

inline void write_assignments(std::ostream& out, std::span<const Document> docs,
                              std::span<const AssignedDocument> assigned, const LocationTable& locations,
                              std::optional<std::int64_t> epoch) {
  out << "doc_id,day,location,topic,is_foreground,theta_max\n";
  for (const auto& a : assigned) {
    const auto& th = a.assignment.theta;
    out << docs[a.index].id << ',' << detail::day_label(a.day, epoch) << ','
        << locations[static_cast<std::size_t>(a.location)].id << ',' << a.topic() << ','
        << (a.is_foreground() ? 1 : 0) << ',' << format_double(th[static_cast<std::size_t>(a.topic())]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Detection report
// ---------------------------------------------------------------------------

inline constexpr const char* kReportHeader = "day,score,topic,center,n,W,C,B,relative_risk,p_value,top_words";

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s.push_back(sep);
    s += parts[i];
  }
  return s;
}

inline void write_report_row(std::ostream& out, int day, const DetectionResult& r, const LocationTable& locations,
                             const std::vector<std::string>& top_words, std::optional<std::int64_t> epoch) {
  out << detail::day_label(day, epoch) << ',' << format_double(r.score) << ',' << r.topic << ','
      << locations[static_cast<std::size_t>(r.region.center)].id << ',' << r.region.n << ',' << r.region.w << ','
      << format_double(r.count) << ',' << format_double(r.baseline) << ',' << format_double(r.relative_risk) << ','
      << (r.p_value ? format_double(*r.p_value) : std::string()) << ',' << join(top_words, '|') << '\n';
}

// ---------------------------------------------------------------------------
// Trial records and ground truth
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const DetectionResult& r) {
  nlohmann::json j{{"center", r.region.center}, {"n", r.region.n},      {"W", r.region.w},
                   {"topic", r.topic},          {"C", r.count},         {"B", r.baseline},
                   {"score", r.score},          {"relative_risk", r.relative_risk}};
  if (r.p_value) j["p_value"] = *r.p_value;
  return j;
}

inline DetectionResult detection_from_json(const nlohmann::json& j) {
  DetectionResult r;
  r.region = {j.at("center").get<int>(), j.at("n").get<int>(), j.at("W").get<int>()};
  r.topic = j.at("topic").get<int>();
  r.count = j.at("C").get<double>();
  r.baseline = j.at("B").get<double>();
  r.score = j.at("score").get<double>();
  r.relative_risk = j.at("relative_risk").get<double>();
  if (j.contains("p_value")) r.p_value = j.at("p_value").get<double>();
  return r;
}

inline nlohmann::json to_json(const TrialRecord& t) {
  nlohmann::json j;
  j["vocabulary"] = t.vocabulary;
  j["truth_distribution"] = t.truth_distribution;
  if (t.truth) {
    const auto& s = t.truth->spec;
    nlohmann::json truth{{"label", s.label},
                         {"start_day", s.start_day},
                         {"duration_days", s.duration_days},
                         {"center_location", s.center_location},
                         {"region_size", s.region_size},
                         {"slope", s.slope},
                         {"seed", s.seed},
                         {"affected_locations", t.truth->affected_locations},
                         {"word_distribution", t.truth->word_distribution}};
    nlohmann::json days = nlohmann::json::array();
    for (const auto& d : t.truth->days)
      days.push_back({{"day", d.day}, {"event_day", d.event_day}, {"injected_ids", d.injected_ids}});
    truth["days"] = std::move(days);
    j["truth"] = std::move(truth);
  }
  nlohmann::json days = nlohmann::json::array();
  for (const auto& d : t.days)
    days.push_back({{"day", d.day},
                    {"event_active", d.event_active},
                    {"top", to_json(d.top)},
                    {"detected_locations", d.detected_locations},
                    {"topic_phi", d.topic_phi},
                    {"top_words", d.top_words},
                    {"detected_doc_ids", d.detected_doc_ids},
                    {"injected_ids", d.injected_ids},
                    {"true_locations", d.true_locations}});
  j["days"] = std::move(days);
  return j;
}

inline TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord t;
  t.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  t.truth_distribution = j.at("truth_distribution").get<std::vector<double>>();
  if (j.contains("truth")) {
    const auto& tj = j.at("truth");
    GroundTruth g;
    g.spec.label = tj.at("label").get<std::string>();
    g.spec.start_day = tj.at("start_day").get<int>();
    g.spec.duration_days = tj.at("duration_days").get<int>();
    g.spec.center_location = tj.at("center_location").get<int>();
    g.spec.region_size = tj.at("region_size").get<int>();
    g.spec.slope = tj.at("slope").get<double>();
    g.spec.seed = tj.at("seed").get<std::uint64_t>();
    g.affected_locations = tj.at("affected_locations").get<std::vector<int>>();
    g.word_distribution = tj.at("word_distribution").get<std::map<std::string, double>>();
    for (const auto& dj : tj.at("days"))
      g.days.push_back({dj.at("day").get<int>(), dj.at("event_day").get<int>(),
                        dj.at("injected_ids").get<std::vector<std::string>>()});
    t.truth = std::move(g);
  }
  for (const auto& dj : j.at("days")) {
    DayRecord d;
    d.day = dj.at("day").get<int>();
    d.event_active = dj.at("event_active").get<bool>();
    d.top = detection_from_json(dj.at("top"));
    d.detected_locations = dj.at("detected_locations").get<std::vector<int>>();
    d.topic_phi = dj.at("topic_phi").get<std::vector<double>>();
    d.top_words = dj.at("top_words").get<std::vector<std::string>>();
    d.detected_doc_ids = dj.at("detected_doc_ids").get<std::vector<std::string>>();
    d.injected_ids = dj.at("injected_ids").get<std::vector<std::string>>();
    d.true_locations = dj.at("true_locations").get<std::vector<int>>();
    t.days.push_back(std::move(d));
  }
  return t;
}

inline void write_trial(const std::string& path, const TrialRecord& t) {
  auto out = detail::open_out(path);
  out << to_json(t).dump() << '\n';
}

inline TrialRecord read_trial(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trial file: " + path);
  try {
    return trial_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// One detection-report row per trial day (the day's top result).
inline void write_trial_report(std::ostream& out, const TrialRecord& t, const LocationTable& locations,
                               std::optional<std::int64_t> epoch) {
  out << kReportHeader << '\n';
  for (const auto& d : t.days) write_report_row(out, d.day, d.top, locations, d.top_words, epoch);
}

/// Per trial day `{day, event_active, true_locations, injected_doc_ids}`,
/// then one line holding the injected word distribution.
inline void write_ground_truth(std::ostream& out, const TrialRecord& t, const LocationTable& locations,
                               std::optional<std::int64_t> epoch) {
  for (const auto& d : t.days) {
    std::vector<std::string> locs;
    for (int i : d.true_locations) locs.push_back(locations[static_cast<std::size_t>(i)].id);
    std::vector<std::string> ids;
    if (t.truth)
      for (const auto& g : t.truth->days)
        if (g.day == d.day) ids = g.injected_ids;
    nlohmann::json j{{"day", detail::day_label(d.day, epoch)},
                     {"event_active", d.event_active},
                     {"true_locations", locs},
                     {"injected_doc_ids", ids}};
    out << j.dump() << '\n';
  }
  nlohmann::json dist = nlohmann::json::object();
  if (t.truth)
    for (const auto& [term, p] : t.truth->word_distribution) dist[term] = p;
  out << nlohmann::json{{"injected_word_distribution", dist}}.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Metric tables
// ---------------------------------------------------------------------------

inline void write_threshold_table(std::ostream& out, const DetectionMetrics& m) {
  out << "fp_per_year,fraction_detected,mean_days_to_detect\n";
  for (const auto& r : m.thresholds)
    out << format_double(r.fp_per_year) << ',' << format_double(r.fraction_detected) << ','
        << format_double(r.mean_days_to_detect) << '\n';
}

inline void write_day_curve(std::ostream& out, const DetectionMetrics& m) {
  out << "event_day,mean_hd,mean_so,mean_do\n";
  for (const auto& r : m.curve)
    out << r.event_day << ',' << format_double(r.mean_hd) << ',' << format_double(r.mean_so) << ','
        << format_double(r.mean_do) << '\n';
}

// ---------------------------------------------------------------------------
// Records and locations (writers, for generated corpora)
// ---------------------------------------------------------------------------

inline void write_records(std::ostream& out, std::span<const Record> records, std::int64_t epoch,
                          const std::vector<Location>& locations) {
  for (const auto& r : records) {
    nlohmann::json j{{"id", r.id},
                     {"date", format_date(epoch + r.day)},
                     {"location", locations[static_cast<std::size_t>(r.location)].id},
                     {"text", join(r.terms, ' ')}};
    if (r.label) j["label"] = *r.label;
    out << j.dump() << '\n';
  }
}

inline void write_locations(std::ostream& out, const std::vector<Location>& locations) {
  out << "id,x,y\n";
  for (const auto& l : locations) out << l.id << ',' << format_double(l.x) << ',' << format_double(l.y) << '\n';
}

}  // namespace semscan
