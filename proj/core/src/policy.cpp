#include "fatigue/policy.hpp"

#include <cmath>
#include <sstream>

#include "fatigue/errors.hpp"
#include "json_util.hpp"

namespace fatigue {

int& InterfaceConfig::operator[](std::size_t i) noexcept {
  switch (i) {
    case 0: return text_size;
    case 1: return notif_freq;
    case 2: return contrast;
    default: return haptic;
  }
}

int InterfaceConfig::operator[](std::size_t i) const noexcept {
  return const_cast<InterfaceConfig&>(*this)[i];
}

bool is_valid(const InterfaceConfig& c) noexcept {
  for (std::size_t i = 0; i < 4; ++i)
    if (c[i] < 0 || c[i] > 2) return false;
  return true;
}

std::string to_string(const InterfaceConfig& c) {
  std::ostringstream os;
  os << '(' << c.text_size << ',' << c.notif_freq << ',' << c.contrast << ',' << c.haptic << ')';
  return os.str();
}

std::string_view action_name(ActionId a) {
  static constexpr std::array<std::string_view, kNumActions> names{
      "keep",       "text-",      "text+",   "notif-", "notif+",
      "contrast-",  "contrast+",  "haptic-", "haptic+"};
  if (a.id >= kNumActions) throw ValidationError("action id out of range: " + std::to_string(a.id));
  return names[a.id];
}

StateId encode_state(int level, const InterfaceConfig& config) {
  if (level < 0 || level > 2) throw ValidationError("fatigue level out of range: " + std::to_string(level));
  if (!is_valid(config)) throw ValidationError("interface config out of range: " + to_string(config));
  const auto u = [](int v) { return static_cast<std::size_t>(v); };
  return {u(level) * 81 + u(config.text_size) * 27 + u(config.notif_freq) * 9 + u(config.contrast) * 3 +
          u(config.haptic)};
}

DecodedState decode_state(StateId s) {
  if (s.id >= kNumStates) throw ValidationError("state id out of range: " + std::to_string(s.id));
  std::size_t id = s.id;
  DecodedState d;
  d.config.haptic = static_cast<int>(id % 3);
  id /= 3;
  d.config.contrast = static_cast<int>(id % 3);
  id /= 3;
  d.config.notif_freq = static_cast<int>(id % 3);
  id /= 3;
  d.config.text_size = static_cast<int>(id % 3);
  d.level = static_cast<int>(id / 3);
  return d;
}

ActionMask feasible_actions(const InterfaceConfig& config) {
  if (!is_valid(config)) throw ValidationError("interface config out of range: " + to_string(config));
  ActionMask m;
  m.set(0);
  for (std::size_t p = 0; p < 4; ++p) {
    if (config[p] > 0) m.set(1 + 2 * p);
    if (config[p] < 2) m.set(2 + 2 * p);
  }
  return m;
}

InterfaceConfig apply_action(const InterfaceConfig& config, ActionId action) {
  if (action.id >= kNumActions) throw ValidationError("action id out of range: " + std::to_string(action.id));
  if (!feasible_actions(config).test(action.id))
    throw ValidationError("action " + std::string(action_name(action)) + " is infeasible at " +
                          to_string(config));
  InterfaceConfig out = config;
  if (action.id == 0) return out;
  const std::size_t param = (action.id - 1) / 2;
  out[param] += (action.id % 2 == 0) ? 1 : -1;
  return out;
}

double compute_reward(const RewardInputs& in, const RewardWeights& w) {
  const auto in_range = [](double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; };
  if (!in_range(in.completion_time_norm, 0.0, 1.0))
    throw ValidationError("completion_time_norm out of range [0, 1]");
  if (!in_range(in.error_rate, 0.0, 1.0)) throw ValidationError("error_rate out of range [0, 1]");
  if (!in_range(in.satisfaction, 1.0, 5.0)) throw ValidationError("satisfaction out of range [1, 5]");
  return w.completion * (1.0 - in.completion_time_norm) + w.errors * (1.0 - in.error_rate) +
         w.satisfaction * (in.satisfaction - 1.0) / 4.0;
}

// ---------------------------------------------------------------------------
// QTable

QTable::QTable(QHyper hyper) : hyper_(hyper) {}

ActionId QTable::greedy(StateId s, const ActionMask& mask) const {
  const auto& r = q_.at(s.id);
  std::size_t best = kNumActions;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    if (!mask.test(a)) continue;
    if (best == kNumActions || r[a] > r[best]) best = a;
  }
  if (best == kNumActions) throw ValidationError("empty action mask");
  return {best};
}

double QTable::max_value(StateId s, const ActionMask& mask) const {
  return q_.at(s.id)[greedy(s, mask).id];
}

ActionId select_action(const QTable& q, StateId s, const ActionMask& mask, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in [0, 1]");
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    std::size_t pick = rng.index(mask.count());
    for (std::size_t a = 0; a < kNumActions; ++a)
      if (mask.test(a) && pick-- == 0) return {a};
  }
  return q.greedy(s, mask);
}

ActionId select_action(const QTable& q, StateId s, double epsilon, Rng& rng) {
  return select_action(q, s, feasible_actions(decode_state(s).config), epsilon, rng);
}

double q_update(QTable& q, StateId s, ActionId a, double reward, StateId s_next,
                const ActionMask& next_mask) {
  if (!std::isfinite(reward)) throw ValidationError("reward must be finite");
  if (a.id >= kNumActions) throw ValidationError("action id out of range");
  const double target = reward + q.hyper().gamma * q.max_value(s_next, next_mask);
  double& entry = q(s, a);
  entry += q.hyper().alpha * (target - entry);
  return entry;
}

double q_update(QTable& q, StateId s, ActionId a, double reward, StateId s_next) {
  if (!feasible_actions(decode_state(s).config).test(a.id))
    throw ValidationError("action is infeasible in the updated state");
  return q_update(q, s, a, reward, s_next, feasible_actions(decode_state(s_next).config));
}

// ---------------------------------------------------------------------------
// Training

double epsilon_at(const QHyper& hyper, std::size_t episode, std::size_t episodes) noexcept {
  if (episodes <= 1) return hyper.eps_start;
  const double frac = static_cast<double>(episode) / static_cast<double>(episodes - 1);
  return hyper.eps_start * (1.0 - frac) + hyper.eps_end * frac;
}

PolicyTraining train_policy(Environment& env, std::size_t episodes, const QHyper& hyper,
                            std::uint64_t seed) {
  if (env.episode_length() == 0) throw ValidationError("environment has zero-length episodes");
  PolicyTraining out{QTable(hyper), {}};
  QTable& q = out.table;
  const Rng root(seed);
  Rng explore = root.split(episodes + 1);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    const double eps = epsilon_at(hyper, ep, episodes);
    Observation obs = env.reset(root.split(ep).key());
    double ret = 0.0;
    for (std::size_t t = 0; t < env.episode_length(); ++t) {
      const StateId s = encode_state(obs.level, obs.config);
      const ActionId a = select_action(q, s, env.action_mask(obs.config), eps, explore);
      const StepResult res = env.step(a);
      const double r = compute_reward(res.reward_inputs, hyper.reward);
      const StateId s_next = encode_state(res.observation.level, res.observation.config);
      q_update(q, s, a, r, s_next, env.action_mask(res.observation.config));
      ret += r;
      obs = res.observation;
      if (res.done) break;
    }
    out.log.push_back({ep, ret, eps});
  }
  return out;
}

std::string policy_log_csv(std::span<const EpisodeLog> log) {
  std::ostringstream os;
  os.precision(17);
  os << "episode,return,epsilon\n";
  for (const auto& e : log) os << e.episode << ',' << e.episode_return << ',' << e.epsilon << '\n';
  return os.str();
}

std::string qtable_to_json(const QTable& q) {
  detail::json j;
  j["format"] = "fatigue-qtable";
  j["version"] = 1;
  const auto& h = q.hyper();
  j["hyper"] = {{"alpha", h.alpha},         {"gamma", h.gamma},
                {"eps_start", h.eps_start}, {"eps_end", h.eps_end},
                {"reward_weights", {h.reward.completion, h.reward.errors, h.reward.satisfaction}}};
  j["states"] = kNumStates;
  j["actions"] = kNumActions;
  detail::json rows = detail::json::array();
  for (std::size_t s = 0; s < kNumStates; ++s) rows.push_back(q.row({s}));
  j["q"] = rows;
  return j.dump();
}

QTable qtable_from_json(std::string_view text) {
  try {
    const auto j = detail::json::parse(text);
    if (j.at("format") != "fatigue-qtable") throw ValidationError("not a Q-table document");
    if (j.at("states").get<std::size_t>() != kNumStates || j.at("actions").get<std::size_t>() != kNumActions)
      throw ValidationError("Q-table must be 243 x 9");
    QHyper h;
    const auto& jh = j.at("hyper");
    h.alpha = jh.at("alpha").get<double>();
    h.gamma = jh.at("gamma").get<double>();
    h.eps_start = jh.at("eps_start").get<double>();
    h.eps_end = jh.at("eps_end").get<double>();
    const auto rw = jh.at("reward_weights").get<std::vector<double>>();
    if (rw.size() != 3) throw ValidationError("reward_weights must have 3 entries");
    h.reward = {rw[0], rw[1], rw[2]};
    QTable q(h);
    const auto& rows = j.at("q");
    if (!rows.is_array() || rows.size() != kNumStates) throw ValidationError("Q-table must have 243 rows");
    for (std::size_t s = 0; s < kNumStates; ++s) {
      const auto row = rows[s].get<std::vector<double>>();
      if (row.size() != kNumActions) throw ValidationError("Q-table row " + std::to_string(s) + " must have 9 values");
      for (std::size_t a = 0; a < kNumActions; ++a) {
        if (!std::isfinite(row[a])) throw ValidationError("non-finite Q value");
        q({s}, {a}) = row[a];
      }
    }
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed Q-table document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// CyclicToyEnvironment

Observation CyclicToyEnvironment::reset(std::uint64_t seed) {
  Rng rng(seed);
  t_ = 0;
  obs_.level = static_cast<int>(rng.index(3));
  obs_.config = InterfaceConfig::uniform(0);
  obs_.config.text_size = static_cast<int>(rng.index(3));
  return obs_;
}

StepResult CyclicToyEnvironment::step(ActionId action) {
  if (!action_mask(obs_.config).test(action.id))
    throw ValidationError("action not available in the toy environment");
  obs_.config = apply_action(obs_.config, action);
  const double m = std::abs(obs_.config.text_size - obs_.level) / 2.0;
  obs_.level = (obs_.level + 1) % 3;
  ++t_;
  return {obs_, RewardInputs{m, m, 5.0 - 4.0 * m}, t_ >= length_};
}

ActionMask CyclicToyEnvironment::action_mask(const InterfaceConfig& config) const {
  return feasible_actions(config) & ActionMask(0b000000111);
}

}  // namespace fatigue
