// semscan: emerging-event detection over geo-tagged short-text streams.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "semscan/semscan.hpp"

using namespace semscan;
namespace fs = std::filesystem;

namespace {

// Settings shared by every subcommand: the config file plus overrides.
struct Settings {
  std::string config_path;
  std::vector<std::string> assignments;  // key=value from --set
  std::vector<std::pair<std::string, std::string>> flags;

  Config load() const {
    Config c = config_path.empty() ? Config{} : Config::load(config_path);
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + a + "'");
      c.set(a.substr(0, eq), a.substr(eq + 1));
    }
    for (const auto& [k, v] : flags) c.set(k, v);
    return c;
  }
};

std::int64_t parse_day(const std::string& key, const std::string& value) {
  if (auto d = parse_date(value)) return *d;
  throw ConfigError("config key '" + key + "' is not a YYYY-MM-DD date: '" + value + "'");
}

std::optional<std::int64_t> date_key(const Config& c, const std::string& key) {
  if (auto v = c.get(key)) return parse_day(key, *v);
  return std::nullopt;
}

std::string output_dir(const Config& c) {
  const std::string dir = c.get("output_dir").value_or("semscan_out");
  fs::create_directories(dir);
  return dir;
}

std::string background_file(const Config& c) {
  return c.get("background_file").value_or((fs::path(output_dir(c)) / "background.csv").string());
}

std::ofstream open_file(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

// Records, locations and day indexing for one run.
struct Inputs {
  LocationTable locations;
  RecordSet records;
  int background_end_day = 0;
  int last_day = 0;
};

Inputs load_inputs(const Config& c) {
  Inputs in;
  in.locations = load_locations(c.require("locations"));
  in.records = load_records(c.require("records"), in.locations);
  if (in.records.records.empty()) throw DataError("no usable records in " + c.require("records"));
  if (in.records.rejected > 0)
    warn(std::to_string(in.records.rejected) + " record(s) with unknown locations skipped");
  for (const auto& r : in.records.records) in.last_day = std::max(in.last_day, r.day);
  const std::int64_t end = parse_day("background_end", c.require("background_end"));
  in.background_end_day = static_cast<int>(end - in.records.epoch);
  if (in.background_end_day <= 0) throw DataError("background_end precedes every record");
  return in;
}

int day_index(const Inputs& in, std::int64_t civil) { return static_cast<int>(civil - in.records.epoch); }

// ---------------------------------------------------------------------------

void cmd_learn_background(const Config& c) {
  const PipelineConfig pc = c.pipeline();
  const Inputs in = load_inputs(c);
  std::vector<Record> background;
  for (const auto& r : in.records.records)
    if (r.day < in.background_end_day) background.push_back(r);
  const Vocabulary vocab = build_vocabulary(background, pc.min_count);
  const auto docs = encode(background, vocab);
  const TopicSet topics = learn_background(docs, vocab.size(), pc);
  const std::string path = background_file(c);
  write_topic_set(path, topics, vocab,
                  {1.0 / static_cast<double>(pc.background_topics), pc.beta.value_or(1.0 / static_cast<double>(vocab.size())),
                   pc.seed, pc.background_sweeps});
  std::cout << "background: " << topics.num_topics() << " topics over " << vocab.size() << " terms from "
            << docs.size() << " documents -> " << path << '\n';
}

void cmd_detect(const Config& c, const std::optional<std::string>& day_flag, const std::optional<std::string>& to_flag) {
  const PipelineConfig pc = c.pipeline();
  const Inputs in = load_inputs(c);
  const LoadedTopics bg = read_topic_set(background_file(c));
  TopicSet background = bg.topics;
  background.freeze_all();
  const auto docs = encode(in.records.records, bg.vocabulary);

  int first = in.background_end_day, last = in.last_day;
  if (day_flag) {
    first = last = day_index(in, parse_day("day", *day_flag));
  } else {
    if (auto d = date_key(c, "detect_from")) first = day_index(in, *d);
    if (auto d = date_key(c, "detect_to")) last = day_index(in, *d);
  }
  if (to_flag) last = day_index(in, parse_day("to", *to_flag));
  if (first > last) throw ConfigError("detection range is empty");

  const auto report_top = static_cast<std::size_t>(c.get_int("report_top").value_or(1));
  const int replicas = static_cast<int>(c.get_int("replicas").value_or(0));
  if (report_top < 1) throw ConfigError("report_top must be >= 1");

  const fs::path dir = output_dir(c);
  auto report = open_file(dir / "detections.csv");
  report << kReportHeader << '\n';
  for (int day = first; day <= last; ++day) {
    DayDetection det = detect_day(docs, background, in.locations.neighbors(), pc, day, report_top);
    const ScanOptions opt = pc.scan_options(in.locations.size());
    for (std::size_t i = 0; i < det.ranked.size(); ++i) {
      DetectionResult r = det.ranked[i];
      if (i == 0 && replicas > 0)
        r.p_value = randomization_test(r.score, det.baselines, in.locations.neighbors(), opt, day, replicas,
                                       mix_seed(pc.seed, 3, static_cast<std::uint64_t>(day)));
      std::vector<std::string> words;
      for (TermId w : det.topics.top_terms(background.num_topics() + static_cast<std::size_t>(r.topic), 20))
        words.push_back(bg.vocabulary.term(w));
      write_report_row(report, day, r, in.locations, words, in.records.epoch);
    }
    const std::string date = format_date(in.records.epoch + day);
    auto assign_out = open_file(dir / ("assignments_" + date + ".csv"));
    write_assignments(assign_out, docs, det.assigned, in.locations, in.records.epoch);
    std::cout << date << ": top score " << format_double(det.top().score) << '\n';
  }
}

void cmd_simulate(const Config& c) {
  const PipelineConfig pc = c.pipeline();
  const Inputs in = load_inputs(c);
  const std::string label = c.require("label");
  const int trials = static_cast<int>(c.get_int("trials").value_or(10));
  const int null_trials = static_cast<int>(c.get_int("null_trials").value_or(1));
  const bool ablation = c.get_bool("ablation").value_or(false);
  if (trials < 0 || null_trials < 0) throw ConfigError("trials and null_trials must be >= 0");

  InjectionSpec base;
  base.label = label;
  base.duration_days = static_cast<int>(c.get_int("duration_days").value_or(30));
  base.region_size = static_cast<int>(c.get_int("region_size").value_or(30));
  base.slope = c.get_double("slope").value_or(20.0);
  base.region_size = std::min<int>(base.region_size, static_cast<int>(in.locations.size()));

  // Event starts must leave room for the whole event before the data ends.
  const int earliest = in.background_end_day;
  const int latest = in.last_day - base.duration_days + 1;
  const auto fixed_start = date_key(c, "event_start");
  if (!fixed_start && latest < earliest)
    throw DataError("foreground period is shorter than the event duration");

  const TrialContext ctx = prepare_trial(in.records.records, in.background_end_day, label, pc);
  const fs::path dir = fs::path(output_dir(c)) / "simulate";
  fs::create_directories(dir);

  auto write_all = [&](const std::string& stem, const TrialRecord& t) {
    write_trial((dir / (stem + ".json")).string(), t);
    auto report = open_file(dir / (stem + "_report.csv"));
    write_trial_report(report, t, in.locations, in.records.epoch);
    auto truth = open_file(dir / (stem + "_truth.jsonl"));
    write_ground_truth(truth, t, in.locations, in.records.epoch);
  };

  for (int i = 0; i < trials; ++i) {
    InjectionSpec spec = base;
    const auto u = static_cast<std::uint64_t>(i);
    spec.seed = mix_seed(pc.seed, 4, u);
    spec.center_location = static_cast<int>(mix_seed(pc.seed, 5, u) % in.locations.size());
    spec.start_day = fixed_start ? day_index(in, *fixed_start)
                                 : earliest + static_cast<int>(mix_seed(pc.seed, 6, u) %
                                                               static_cast<std::uint64_t>(latest - earliest + 1));
    const int last = std::min(in.last_day, spec.start_day + spec.duration_days - 1);
    char stem[32];
    std::snprintf(stem, sizeof stem, "trial_%03d", i);
    write_all(stem, run_trial(ctx, spec, in.locations, pc, spec.start_day, last));
    if (ablation) {
      PipelineConfig plain = pc;
      plain.contrastive = false;
      std::snprintf(stem, sizeof stem, "ablation_%03d", i);
      write_all(stem, run_trial(ctx, spec, in.locations, plain, spec.start_day, last));
    }
    std::cout << "trial " << i << ": event at " << in.locations[static_cast<std::size_t>(spec.center_location)].id
              << " from " << format_date(in.records.epoch + spec.start_day) << '\n';
  }

  // Null trials scan every foreground day without an injection; each uses its
  // own detection seed so repeated null runs sample different chains.
  int null_first = in.background_end_day, null_last = in.last_day;
  if (auto d = date_key(c, "detect_from")) null_first = day_index(in, *d);
  if (auto d = date_key(c, "detect_to")) null_last = day_index(in, *d);
  for (int i = 0; i < null_trials; ++i) {
    PipelineConfig nc = pc;
    nc.seed = i == 0 ? pc.seed : mix_seed(pc.seed, 7, static_cast<std::uint64_t>(i));
    char stem[32];
    std::snprintf(stem, sizeof stem, "null_%03d", i);
    write_all(stem, run_trial(ctx, std::nullopt, in.locations, nc, null_first, null_last));
    std::cout << "null trial " << i << ": " << (null_last - null_first + 1) << " days\n";
  }
}

void cmd_evaluate(const Config& c) {
  const fs::path dir = fs::path(output_dir(c)) / "simulate";
  if (!fs::is_directory(dir)) throw DataError("no simulation output in " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<TrialRecord> injected, null, plain;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    if (name.rfind("trial_", 0) == 0) injected.push_back(read_trial(f.string()));
    else if (name.rfind("null_", 0) == 0) null.push_back(read_trial(f.string()));
    else if (name.rfind("ablation_", 0) == 0) plain.push_back(read_trial(f.string()));
  }
  if (injected.empty()) throw DataError("no injected trials in " + dir.string());
  if (null.empty()) throw DataError("no null trials in " + dir.string());

  std::vector<double> targets = c.get_doubles("fp_targets");
  if (targets.empty()) targets = {52, 26, 12, 6, 4, 2, 1};
  const auto thresholds = calibrate_thresholds(null_day_scores(null), targets);
  const fs::path out = output_dir(c);
  const auto m = detection_metrics(injected, thresholds);
  auto table = open_file(out / "thresholds.csv");
  write_threshold_table(table, m);
  auto curve = open_file(out / "day_curve.csv");
  write_day_curve(curve, m);
  if (!plain.empty()) {
    auto ab = open_file(out / "day_curve_ablation.csv");
    write_day_curve(ab, detection_metrics(plain, thresholds));
  }
  for (const auto& r : m.thresholds)
    std::cout << "fp/year " << format_double(r.fp_per_year) << ": threshold " << format_double(r.threshold)
              << ", detected " << r.detected << "/" << r.trials << '\n';
}

void cmd_synthesize(const Config& c) {
  SyntheticSpec spec;
  spec.seed = static_cast<std::uint64_t>(c.get_int("seed").value_or(0));
  const SyntheticCorpus corpus = make_synthetic_corpus(spec);
  const fs::path dir = output_dir(c);
  const std::int64_t epoch = *parse_date("2014-01-01");
  auto records = open_file(dir / "records.jsonl");
  write_records(records, corpus.records, epoch, corpus.locations);
  auto locations = open_file(dir / "locations.csv");
  write_locations(locations, corpus.locations);
  std::cout << corpus.records.size() << " records, " << corpus.locations.size() << " locations; background ends "
            << format_date(epoch + corpus.background_end_day) << ", event label '" << spec.event_label << "'\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emerging-event detection with contrastive topics and spatial scan"};
  app.require_subcommand(1);
  Settings s;
  app.add_option("-c,--config", s.config_path, "key = value configuration file");
  app.add_option("--set", s.assignments, "override a config key (key=value); repeatable");

  std::string records, locations, background_end, out_dir, seed, threads;
  app.add_option("--records", records, "JSON-lines records file");
  app.add_option("--locations", locations, "location table (id,x,y)");
  app.add_option("--background-end", background_end, "first date of the foreground period");
  app.add_option("-o,--output-dir", out_dir, "directory for outputs");
  app.add_option("--seed", seed, "master random seed");
  app.add_option("--threads", threads, "worker threads for assignment and scan");

  auto* learn = app.add_subcommand("learn-background", "fit and save the frozen background topics");
  auto* detect = app.add_subcommand("detect", "detect emerging events for one day or a range");
  std::string day, to;
  detect->add_option("--day", day, "detection date (YYYY-MM-DD)");
  detect->add_option("--to", to, "last detection date of a range");
  auto* simulate = app.add_subcommand("simulate", "run injected and null detection trials");
  std::string label, trials;
  simulate->add_option("--label", label, "category to hold out and inject");
  simulate->add_option("--trials", trials, "number of injected trials");
  auto* evaluate = app.add_subcommand("evaluate", "detection curves from simulation output");
  auto* pipeline = app.add_subcommand("pipeline", "learn-background, detect, and (with a label) simulate and evaluate");
  auto* synth = app.add_subcommand("synthesize", "write a synthetic demo corpus");
  for (auto* sub : {learn, detect, simulate, evaluate, pipeline, synth}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    auto flag = [&](const char* key, const std::string& v) {
      if (!v.empty()) s.flags.emplace_back(key, v);
    };
    flag("records", records);
    flag("locations", locations);
    flag("background_end", background_end);
    flag("output_dir", out_dir);
    flag("seed", seed);
    flag("threads", threads);
    flag("label", label);
    flag("trials", trials);
    const Config c = s.load();
    auto opt = [](const std::string& v) { return v.empty() ? std::nullopt : std::optional<std::string>(v); };

    if (*learn) cmd_learn_background(c);
    else if (*detect) cmd_detect(c, opt(day), opt(to));
    else if (*simulate) cmd_simulate(c);
    else if (*evaluate) cmd_evaluate(c);
    else if (*synth) cmd_synthesize(c);
    else if (*pipeline) {
      cmd_learn_background(c);
      cmd_detect(c, std::nullopt, std::nullopt);
      if (c.has("label")) {
        cmd_simulate(c);
        cmd_evaluate(c);
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "semscan: configuration error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "semscan: error: " << e.what() << '\n';
    return 2;
  }
}
