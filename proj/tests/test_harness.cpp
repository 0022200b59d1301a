#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "fatigue/errors.hpp"
#include "fatigue/harness.hpp"

using namespace fatigue;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fatigue_unit_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.scenario = "steady";
  c.out = out.string();
  c.generate_episodes = 10;
  c.holdout_episodes = 0;
  c.eval_episodes = 4;
  c.policy_episodes = 50;
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  return files;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Config, DefaultsRoundTripAndUnknownKeys) {
  const ExperimentConfig c;
  EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c));
  EXPECT_THROW(config_from_json("{\"epochs\": 3}"), ValidationError);
  EXPECT_THROW(config_from_json("{\"detector\": {\"lr\": -1}}"), ValidationError);
  EXPECT_THROW(config_from_json("{\"seeds\": []}"), ValidationError);
  EXPECT_THROW(config_from_json("[1]"), ValidationError);
  const auto parsed = config_from_json("{\"seeds\": [4, 5], \"static_level\": 2}");
  EXPECT_EQ(parsed.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_EQ(parsed.static_level, 2);
}

TEST(Config, RelativePathsFollowTheConfigFile) {
  const auto dir = fresh_dir("config_paths");
  fs::create_directories(dir / "cfg");
  write_file((dir / "scn.json").string(), scenario_to_json(builtin_scenario("short")));
  write_file((dir / "cfg" / "c.json").string(), R"({"scenario": "../scn.json", "out": "../out"})");
  const auto c = load_config((dir / "cfg" / "c.json").string());
  EXPECT_EQ(fs::path(c.scenario), (dir / "scn.json").lexically_normal());
  EXPECT_EQ(fs::path(c.out), (dir / "out").lexically_normal());
  write_file((dir / "cfg" / "bad.json").string(), R"({"scenario": "missing.json"})");
  EXPECT_THROW(load_config((dir / "cfg" / "bad.json").string()), ValidationError);
}

TEST(Metrics, MedianOracle) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_THROW(median({}), ValidationError);
}

TEST(Metrics, AggregateMatchesDefinitions) {
  StaticController s;
  const Scenario sc = builtin_scenario("short");
  std::vector<EpisodeTrace> traces{run_episode(sc, s, 1), run_episode(sc, s, 2)};
  std::vector<double> fitness;
  double tlx = 0.0, sat = 0.0;
  for (const auto& t : traces)
    for (const auto& r : t.steps) {
      fitness.push_back(r.fitness);
      tlx += r.tlx;
      sat += r.satisfaction;
    }
  std::sort(fitness.begin(), fitness.end());
  const std::size_t n = fitness.size();
  const double med = n % 2 ? fitness[n / 2] : 0.5 * (fitness[n / 2 - 1] + fitness[n / 2]);
  const auto rec = aggregate("static", std::nullopt, traces);
  EXPECT_EQ(rec.adaptability, med);
  EXPECT_NEAR(rec.tlx, tlx / n, 1e-12);
  EXPECT_NEAR(rec.satisfaction, sat / n, 1e-12);
}

TEST(Metrics, StaticBaselineAdaptabilityIsOneHalf) {
  // the all-medium interface is half-mismatched whenever fatigue is low or high
  StaticController s;
  const Scenario sc = builtin_scenario("default");
  std::vector<EpisodeTrace> traces;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) traces.push_back(run_episode(sc, s, seed));
  EXPECT_EQ(aggregate("static", std::nullopt, traces).adaptability, 0.50);
}

TEST(Metrics, CsvColumnsAndDeltas) {
  const std::vector<MetricsRecord> rows{{"adaptive", 0.9, 0.75, 30.0, 4.0}, {"static", std::nullopt, 0.5, 40.0, 2.0}};
  const auto csv = metrics_csv(rows);
  EXPECT_EQ(first_line(csv), "condition,accuracy,adaptability,tlx,satisfaction");
  EXPECT_NE(csv.find("\nstatic,,"), std::string::npos);
  const auto deltas = deltas_csv(rows, "static");
  EXPECT_EQ(deltas.substr(deltas.find('\n') + 1), "adaptive,static,0.25,-25,100\n");
  EXPECT_THROW(deltas_csv(rows, "none"), ValidationError);
}

TEST(Commands, GenerateCountsFilesAndWindows) {
  const auto dir = fresh_dir("generate");
  const auto cfg = small_config(dir);
  std::ostringstream log;
  const auto summary = cmd_generate(cfg, 1, log);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "data")) files += e.path().extension() == ".jsonl";
  EXPECT_EQ(files, 10u);
  EXPECT_EQ(summary.episodes, 10u);
  EXPECT_EQ(summary.windows, 1000u);
  EXPECT_EQ(summary.class_counts[0] + summary.class_counts[1] + summary.class_counts[2], 1000u);
  EXPECT_EQ(load_windows((dir / "data").string(), "episode_", kDefaultWindow).size(),
            1000u);
  const auto manifest = read_file((dir / "data" / "manifest.json").string());
  EXPECT_NE(manifest.find("\"steps_per_episode\""), std::string::npos);
}

TEST(Commands, MissingArtifactsAreReported) {
  const auto dir = fresh_dir("missing");
  std::ostringstream log;
  EXPECT_THROW(cmd_train(small_config(dir), log), ValidationError);
  EXPECT_THROW(cmd_evaluate(small_config(dir), log), ValidationError);
}

TEST(Commands, ZeroPolicyEpisodesGiveZeroTable) {
  const auto dir = fresh_dir("zero_policy");
  auto cfg = small_config(dir);
  cfg.policy_episodes = 0;
  std::ostringstream log;
  cmd_train_policy(cfg, log);
  EXPECT_EQ(qtable_from_json(read_file((dir / "models" / "qtable.json").string())), QTable(cfg.policy));
}

TEST(Commands, PipelineIsReproducible) {
  const auto a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  std::ostringstream log;
  auto ca = small_config(a), cb = small_config(b);
  cb.threads = 1;
  TrainSummary ta;
  for (auto* c : {&ca, &cb}) {
    cmd_generate(*c, 1, log);
    const auto t = cmd_train(*c, log);
    if (c == &ca) ta = t;
    const auto eval = cmd_evaluate(*c, log);
    EXPECT_EQ(eval.rows.size(), 6u);
  }
  EXPECT_GE(ta.detector_train_accuracy, 0.85);
  const auto sa = snapshot(a), sb = snapshot(b);
  ASSERT_EQ(sa.size(), sb.size());
  for (const auto& [name, content] : sa) EXPECT_EQ(content, sb.at(name)) << name;
  EXPECT_EQ(first_line(sa.at("eval/metrics.csv")), "condition,accuracy,adaptability,tlx,satisfaction");
}

TEST(Commands, GradcheckCorruptionFailsOnlyThatTensor) {
  std::ostringstream clean;
  EXPECT_EQ(cmd_gradcheck(2, {}, clean), kExitOk);
  GradcheckOptions opt;
  opt.corrupt = "eye.u_r";
  std::ostringstream bad;
  EXPECT_EQ(cmd_gradcheck(2, opt, bad), kExitCheckFailed);
  std::istringstream lines(bad.str());
  std::size_t failures = 0;
  for (std::string line; std::getline(lines, line);)
    if (line.starts_with("FAIL ")) {
      ++failures;
      EXPECT_TRUE(line.starts_with("FAIL eye.u_r ")) << line;
    }
  EXPECT_EQ(failures, 1u);
}

TEST(Commands, ReplayWritesOneRowPerWindow) {
  const auto dir = fresh_dir("replay");
  auto cfg = small_config(dir);
  cfg.generate_episodes = 2;
  std::ostringstream log;
  cmd_generate(cfg, 3, log);
  Rng rng(5);
  const Detector d(DetectorOptions{}, rng);
  write_file((dir / "model.json").string(), detector_to_json(d));
  std::ostringstream out;
  cmd_replay((dir / "data" / "episode_0000.jsonl").string(), (dir / "model.json").string(), out);
  const auto text = out.str();
  EXPECT_EQ(first_line(text), "window,start_t,end_t,level,p_low,p_medium,p_high,label");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 101);
}
