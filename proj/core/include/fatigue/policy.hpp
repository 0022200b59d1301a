#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fatigue/rng.hpp"

namespace fatigue {

// Interface parameters, each a discrete level in {0, 1, 2}.
struct InterfaceConfig {
  int text_size = 1;
  int notif_freq = 1;
  int contrast = 1;
  int haptic = 1;

  int& operator[](std::size_t i) noexcept;
  int operator[](std::size_t i) const noexcept;
  bool operator==(const InterfaceConfig&) const = default;

  static InterfaceConfig uniform(int level) noexcept { return {level, level, level, level}; }
};

bool is_valid(const InterfaceConfig& c) noexcept;
std::string to_string(const InterfaceConfig& c);

inline constexpr std::size_t kNumStates = 243;
inline constexpr std::size_t kNumActions = 9;

// id = level*81 + text*27 + notif*9 + contrast*3 + haptic
struct StateId {
  std::size_t id = 0;
  bool operator==(const StateId&) const = default;
};

struct DecodedState {
  int level = 0;
  InterfaceConfig config;
  bool operator==(const DecodedState&) const = default;
};

// 0 keep; 1/2 text -/+; 3/4 notif -/+; 5/6 contrast -/+; 7/8 haptic -/+
struct ActionId {
  std::size_t id = 0;
  bool operator==(const ActionId&) const = default;
};

inline constexpr ActionId kKeep{0};

using ActionMask = std::bitset<kNumActions>;

std::string_view action_name(ActionId a);

// Throws ValidationError on out-of-range components.
StateId encode_state(int level, const InterfaceConfig& config);
DecodedState decode_state(StateId s);

ActionMask feasible_actions(const InterfaceConfig& config);
// Throws ValidationError if the action is infeasible for config.
InterfaceConfig apply_action(const InterfaceConfig& config, ActionId action);

struct RewardInputs {
  double completion_time_norm = 0.0;  // [0, 1]
  double error_rate = 0.0;            // [0, 1]
  double satisfaction = 3.0;          // [1, 5]
};

struct RewardWeights {
  double completion = 0.4;
  double errors = 0.3;
  double satisfaction = 0.3;

  bool operator==(const RewardWeights&) const = default;
};

// R = wc (1 - completion) + we (1 - error) + ws (satisfaction - 1) / 4.
// Throws ValidationError on out-of-range inputs.
double compute_reward(const RewardInputs& in, const RewardWeights& w = {});

struct QHyper {
  double alpha = 0.1;  // learning rate of the TD update
  double gamma = 0.9;  // discount
  double eps_start = 0.3;
  double eps_end = 0.02;
  RewardWeights reward;

  bool operator==(const QHyper&) const = default;
};

class QTable {
 public:
  explicit QTable(QHyper hyper = {});

  double& operator()(StateId s, ActionId a) { return q_[s.id][a.id]; }
  double operator()(StateId s, ActionId a) const { return q_[s.id][a.id]; }
  const std::array<double, kNumActions>& row(StateId s) const { return q_[s.id]; }

  const QHyper& hyper() const noexcept { return hyper_; }
  QHyper& hyper() noexcept { return hyper_; }

  // Greedy feasible action, lowest index on ties.
  ActionId greedy(StateId s, const ActionMask& mask) const;
  double max_value(StateId s, const ActionMask& mask) const;

  bool operator==(const QTable&) const = default;

 private:
  QHyper hyper_;
  std::array<std::array<double, kNumActions>, kNumStates> q_{};
};

// epsilon-greedy over the mask (or over the feasible set of the state's
// config). The keep action is always feasible, so the set is never empty.
ActionId select_action(const QTable& q, StateId s, double epsilon, Rng& rng);
ActionId select_action(const QTable& q, StateId s, const ActionMask& mask, double epsilon, Rng& rng);

// Q(s,a) += alpha [r + gamma max_a' Q(s',a') - Q(s,a)], max over the
// feasible actions of s_next. Returns the new value.
double q_update(QTable& q, StateId s, ActionId a, double reward, StateId s_next);
double q_update(QTable& q, StateId s, ActionId a, double reward, StateId s_next,
                const ActionMask& next_mask);

struct Observation {
  int level = 0;
  InterfaceConfig config;
};

struct StepResult {
  Observation observation;
  RewardInputs reward_inputs;
  bool done = false;
};

// Episodic environment. Episodes are time-limit truncations: training
// bootstraps from the final observation rather than treating it as terminal.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual Observation reset(std::uint64_t seed) = 0;
  virtual StepResult step(ActionId action) = 0;
  virtual std::size_t episode_length() const = 0;
  virtual ActionMask action_mask(const InterfaceConfig& config) const { return feasible_actions(config); }
};

struct EpisodeLog {
  std::size_t episode = 0;
  double episode_return = 0.0;
  double epsilon = 0.0;
};

struct PolicyTraining {
  QTable table;
  std::vector<EpisodeLog> log;
};

// Linear epsilon decay from eps_start (first episode) to eps_end (last).
double epsilon_at(const QHyper& hyper, std::size_t episode, std::size_t episodes) noexcept;

// Episode e resets the environment with seed Rng(seed).split(e).key();
// exploration draws come from Rng(seed).split(episodes + 1).
PolicyTraining train_policy(Environment& env, std::size_t episodes, const QHyper& hyper,
                            std::uint64_t seed);

std::string policy_log_csv(std::span<const EpisodeLog> log);
std::string qtable_to_json(const QTable& q);
QTable qtable_from_json(std::string_view text);

// Deterministic reduced environment: the fatigue level cycles 0 -> 1 -> 2 -> 0
// every step and only text_size can be adjusted (actions 0, 1, 2). The
// reward is 1 - |text after the action - level| / 2, delivered through
// RewardInputs so that compute_reward yields exactly that value.
class CyclicToyEnvironment : public Environment {
 public:
  explicit CyclicToyEnvironment(std::size_t length = 12) : length_(length) {}

  Observation reset(std::uint64_t seed) override;
  StepResult step(ActionId action) override;
  std::size_t episode_length() const override { return length_; }
  ActionMask action_mask(const InterfaceConfig& config) const override;

 private:
  std::size_t length_;
  std::size_t t_ = 0;
  Observation obs_;
};

}  // namespace fatigue
