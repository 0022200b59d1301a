#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fatigue/detector.hpp"
#include "fatigue/encoders.hpp"
#include "fatigue/gradcheck.hpp"
#include "fatigue/policy.hpp"
#include "fatigue/sentiment.hpp"
#include "fatigue/simulator.hpp"

namespace fatigue {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitCheckFailed = 3;

std::string default_sentiment_data_path();

struct ExperimentConfig {
  std::string scenario = "default";  // built-in name or path to a .json file
  std::vector<std::uint64_t> seeds{1};
  std::string out = "run";

  std::size_t generate_episodes = 20;
  std::size_t holdout_episodes = 40;
  std::size_t eval_episodes = 50;
  int static_level = 1;

  DetectorHyper detector;
  bool denoise = false;
  std::size_t denoise_corpus = 400;
  DenoiserTraining denoiser;

  std::size_t policy_episodes = 3000;
  QHyper policy;

  std::string sentiment_data = default_sentiment_data_path();
  SentimentHyper sentiment;

  std::size_t threads = 0;  // 0: hardware concurrency

  std::uint64_t run_seed() const { return seeds.front(); }
};

// Unknown keys are rejected. Throws ValidationError. The scenario is only
// checked by validate().
ExperimentConfig config_from_json(std::string_view text);
// Relative scenario, sentiment_data and out paths are taken from the
// directory of the config file.
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& c);
void validate(const ExperimentConfig& c);

struct MetricsRecord {
  std::string condition;
  std::optional<double> accuracy;  // [0, 1]; absent for the static interface
  double adaptability = 0.0;       // median fitness over all steps
  double tlx = 0.0;                // mean, [0, 100]
  double satisfaction = 0.0;       // mean, [1, 5]
};

double median(std::vector<double> v);
// Aggregates per-step records of one condition.
MetricsRecord aggregate(std::string condition, std::optional<double> accuracy,
                        std::span<const EpisodeTrace> traces);

// Columns exactly: condition,accuracy,adaptability,tlx,satisfaction
std::string metrics_csv(std::span<const MetricsRecord> rows);
std::string metrics_table(std::span<const MetricsRecord> rows);
// Relative change of each condition against the named baseline.
std::string deltas_csv(std::span<const MetricsRecord> rows, std::string_view baseline);

// Level observer backed by a detector reading the frames of the last step.
class DetectorObserver : public LevelObserver {
 public:
  explicit DetectorObserver(const Detector& detector) : detector_(detector) {}
  int initial(const SimUserState&) override { return 0; }
  int observe(const StepOutcome& outcome, const SimUserState& next) override;

 private:
  const Detector& detector_;
};

struct GenerateSummary {
  std::size_t episodes = 0;
  std::size_t windows = 0;
  std::array<std::size_t, kLevels> class_counts{};
};

struct TrainSummary {
  double detector_train_accuracy = 0.0;
  std::vector<std::pair<std::string, double>> ablation_train_accuracy;
  double sentiment_test_accuracy = 0.0;
  double final_policy_return = 0.0;
};

struct EvaluateSummary {
  std::vector<MetricsRecord> rows;
};

// Each command writes under config.out and logs progress to `log`.
GenerateSummary cmd_generate(const ExperimentConfig& config, std::uint64_t seed, std::ostream& log);
TrainSummary cmd_train(const ExperimentConfig& config, std::ostream& log);
double cmd_train_policy(const ExperimentConfig& config, std::ostream& log);
EvaluateSummary cmd_evaluate(const ExperimentConfig& config, std::ostream& log);
// Returns kExitOk when every tensor passes, kExitCheckFailed otherwise.
int cmd_gradcheck(std::uint64_t seed, const GradcheckOptions& options, std::ostream& out);
// Per-window estimates of a recorded session as CSV.
void cmd_replay(const std::string& session_path, const std::string& model_path, std::ostream& out);

// Helpers shared with tests.
std::vector<Window> load_windows(const std::string& dir, std::string_view prefix, std::size_t window);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace fatigue
