#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fatigue/ingestion.hpp"
#include "fatigue/policy.hpp"
#include "fatigue/rng.hpp"

namespace fatigue {

enum class Profile { typical, impaired };

std::string_view to_string(Profile p) noexcept;

// Generative constants of the simulated user. Defaults are the reference
// model; every field can be overridden from a scenario file.
struct SimCoefficients {
  // fatigue dynamics, per decision step
  double workload_gain = 0.02;
  double mismatch_gain = 0.03;
  double rest_relief = 0.05;
  double fatigue_noise = 0.005;
  double impaired_sensitivity = 1.5;
  // signals, per 1 Hz frame
  double hr_base = 60.0, hr_gain = 25.0, hr_noise = 3.0;
  double blink_base_per_min = 10.0, blink_gain_per_min = 20.0;
  double gaze_base = 30.0, gaze_drop = 0.5, gaze_noise = 2.0;
  double pupil_base = 4.0, pupil_gain = -1.5, pupil_noise = 0.1;
  double gsr_base = 2.0, gsr_gain = 6.0, gsr_noise = 0.3;
  // task performance and subjective proxies
  double error_base = 0.05, error_fatigue = 0.35, error_mismatch = 0.45, error_noise = 0.05;
  double time_base = 0.2, time_fatigue = 0.3, time_mismatch = 0.4, time_noise = 0.05;
  double tlx_fatigue = 0.55, tlx_mismatch = 0.40, tlx_noise = 0.05;
  double sat_base = 5.0, sat_fatigue = 1.2, sat_mismatch = 2.8, sat_noise = 0.2;
};

struct WorkloadSegment {
  std::size_t start = 0;  // first step of the segment
  double value = 0.5;     // [0, 1]
};

struct Scenario {
  std::string name = "custom";
  std::size_t steps = 100;
  std::size_t window = kDefaultWindow;  // frames per step at 1 Hz
  std::vector<WorkloadSegment> workload{{0, 0.5}};
  std::vector<std::size_t> break_steps;
  double impaired_share = 0.4;
  double ar_glasses_share = 0.5;
  double initial_fatigue_min = 0.0;
  double initial_fatigue_max = 0.0;
  double lux_min = 300.0;
  double lux_max = 300.0;
  bool noise = true;
  bool haptic_rises_with_fatigue = false;
  SimCoefficients coef;

  // Piecewise-constant schedule; the last segment starting at or before step.
  double workload_at(std::size_t step) const;
  bool is_break(std::size_t step) const;
};

// Throws ValidationError on inconsistent fields.
void validate(const Scenario& s);

// Built-in names: "default", "steady", "short".
Scenario builtin_scenario(std::string_view name);
std::vector<std::string> builtin_scenario_names();
Scenario scenario_from_json(std::string_view text);
std::string scenario_to_json(const Scenario& s);
// A path ending in ".json" is read from disk, anything else is a built-in name.
Scenario load_scenario(const std::string& name_or_path);

struct SimUserState {
  double fatigue = 0.0;  // [0, 1]
  double workload = 0.0;
  double elapsed_minutes = 0.0;
  Profile profile = Profile::typical;
  Device device = Device::watch;
  double ambient_lux = 300.0;
};

// 0 below 1/3, 1 below 2/3, else 2.
int fatigue_level(double fatigue) noexcept;

// (text = L, notif = 2 - L, contrast = L, haptic = 2 - L), or haptic = L when
// haptic intensity rises with fatigue.
InterfaceConfig target_config(int level, bool haptic_rises_with_fatigue = false);

// Sum of per-parameter absolute level differences divided by 8.
double mismatch(const InterfaceConfig& config, const InterfaceConfig& target);

// One step of the latent dynamics, clamped to [0, 1]. xi is a standard normal draw.
double next_fatigue(double fatigue, double workload, double mismatch, Profile profile, bool rest,
                    double xi, const SimCoefficients& c);

struct StepOutcome {
  std::vector<SensorFrame> frames;  // labelled with level
  int level = 0;
  double mismatch = 0.0;
  RewardInputs reward_inputs;
  double tlx = 0.0;            // [0, 100]
  double satisfaction = 5.0;   // [1, 5]
};

// Simulates one decision step under config. The outcome describes the step
// just lived (current fatigue and the mismatch against its target); the
// returned state carries the updated fatigue and clock.
std::pair<SimUserState, StepOutcome> step_user(const SimUserState& state, const InterfaceConfig& config,
                                               const Scenario& scenario, std::size_t step, Rng& rng);

// Draws profile, device, light and initial fatigue for an episode.
SimUserState initial_state(const Scenario& scenario, Rng& rng);

class Controller {
 public:
  virtual ~Controller() = default;
  virtual ActionId act(const Observation& obs) = 0;
};

// Never changes the interface.
class StaticController : public Controller {
 public:
  ActionId act(const Observation&) override { return kKeep; }
};

// Moves the first mismatched parameter one level toward the target for the
// observed level.
class OracleController : public Controller {
 public:
  explicit OracleController(bool haptic_rises_with_fatigue = false) : haptic_rises_(haptic_rises_with_fatigue) {}
  ActionId act(const Observation& obs) override;

 private:
  bool haptic_rises_;
};

// Greedy action from a frozen Q-table.
class GreedyController : public Controller {
 public:
  explicit GreedyController(const QTable& table) : table_(table) {}
  ActionId act(const Observation& obs) override;

 private:
  const QTable& table_;
};

// Random feasible adjustment with probability p_move, else keep. Used as the
// behaviour policy for data generation.
class RandomWalkController : public Controller {
 public:
  RandomWalkController(Rng rng, double p_move = 0.5) : rng_(rng), p_move_(p_move) {}
  ActionId act(const Observation& obs) override;

 private:
  Rng rng_;
  double p_move_;
};

// Source of the fatigue level seen by the controller.
class LevelObserver {
 public:
  virtual ~LevelObserver() = default;
  virtual int initial(const SimUserState& state) = 0;
  virtual int observe(const StepOutcome& outcome, const SimUserState& next) = 0;
};

// Reads the latent state directly.
class TrueLevelObserver : public LevelObserver {
 public:
  int initial(const SimUserState& s) override { return fatigue_level(s.fatigue); }
  int observe(const StepOutcome&, const SimUserState& next) override { return fatigue_level(next.fatigue); }
};

struct StepRecord {
  std::size_t step = 0;
  StateId state;           // observed level x config before the action
  ActionId action;
  InterfaceConfig config;  // after the action
  int true_level = 0;
  int observed_level = 0;
  double fatigue = 0.0;
  double reward = 0.0;
  double tlx = 0.0;
  double satisfaction = 0.0;
  double fitness = 0.0;  // 1 - mismatch
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  Profile profile = Profile::typical;
  Device device = Device::watch;
  std::vector<StepRecord> steps;
  std::vector<SensorFrame> frames;
};

struct EpisodeOptions {
  InterfaceConfig start = InterfaceConfig::uniform(1);
  bool keep_frames = true;
};

// Episode RNG: Rng(seed).split(2) for the initial state, split(1) for user
// noise. Identical seeds give bit-identical traces.
EpisodeTrace run_episode(const Scenario& scenario, Controller& controller, std::uint64_t seed,
                         LevelObserver* observer = nullptr, const EpisodeOptions& options = {});

// Header: condition,episode,step,state,action,text,notif,contrast,haptic,
// true_level,observed_level,fatigue,reward,tlx,satisfaction,fitness
std::string trace_csv_header();
std::string trace_csv_rows(const EpisodeTrace& trace, std::string_view condition, std::size_t episode);

// Simulator as a policy-training environment; observations carry the true
// level of the state in which the next action is taken.
class SimEnvironment : public Environment {
 public:
  explicit SimEnvironment(Scenario scenario, bool randomize_start = true);

  Observation reset(std::uint64_t seed) override;
  StepResult step(ActionId action) override;
  std::size_t episode_length() const override { return scenario_.steps; }

  const SimUserState& user() const noexcept { return user_; }

 private:
  Scenario scenario_;
  bool randomize_start_;
  SimUserState user_;
  InterfaceConfig config_;
  Rng noise_{0};
  std::size_t t_ = 0;
};

}  // namespace fatigue
