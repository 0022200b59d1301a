#include "fatigue/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fatigue/errors.hpp"
#include "json_util.hpp"

namespace fatigue {

namespace {

struct CoefField {
  const char* name;
  double SimCoefficients::*member;
};

constexpr CoefField kCoefFields[] = {
    {"workload_gain", &SimCoefficients::workload_gain},
    {"mismatch_gain", &SimCoefficients::mismatch_gain},
    {"rest_relief", &SimCoefficients::rest_relief},
    {"fatigue_noise", &SimCoefficients::fatigue_noise},
    {"impaired_sensitivity", &SimCoefficients::impaired_sensitivity},
    {"hr_base", &SimCoefficients::hr_base},
    {"hr_gain", &SimCoefficients::hr_gain},
    {"hr_noise", &SimCoefficients::hr_noise},
    {"blink_base_per_min", &SimCoefficients::blink_base_per_min},
    {"blink_gain_per_min", &SimCoefficients::blink_gain_per_min},
    {"gaze_base", &SimCoefficients::gaze_base},
    {"gaze_drop", &SimCoefficients::gaze_drop},
    {"gaze_noise", &SimCoefficients::gaze_noise},
    {"pupil_base", &SimCoefficients::pupil_base},
    {"pupil_gain", &SimCoefficients::pupil_gain},
    {"pupil_noise", &SimCoefficients::pupil_noise},
    {"gsr_base", &SimCoefficients::gsr_base},
    {"gsr_gain", &SimCoefficients::gsr_gain},
    {"gsr_noise", &SimCoefficients::gsr_noise},
    {"error_base", &SimCoefficients::error_base},
    {"error_fatigue", &SimCoefficients::error_fatigue},
    {"error_mismatch", &SimCoefficients::error_mismatch},
    {"error_noise", &SimCoefficients::error_noise},
    {"time_base", &SimCoefficients::time_base},
    {"time_fatigue", &SimCoefficients::time_fatigue},
    {"time_mismatch", &SimCoefficients::time_mismatch},
    {"time_noise", &SimCoefficients::time_noise},
    {"tlx_fatigue", &SimCoefficients::tlx_fatigue},
    {"tlx_mismatch", &SimCoefficients::tlx_mismatch},
    {"tlx_noise", &SimCoefficients::tlx_noise},
    {"sat_base", &SimCoefficients::sat_base},
    {"sat_fatigue", &SimCoefficients::sat_fatigue},
    {"sat_mismatch", &SimCoefficients::sat_mismatch},
    {"sat_noise", &SimCoefficients::sat_noise},
};

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

std::string_view to_string(Profile p) noexcept {
  return p == Profile::typical ? "typical" : "impaired";
}

// ---------------------------------------------------------------------------
// Scenario

double Scenario::workload_at(std::size_t step) const {
  double w = 0.0;
  for (const auto& seg : workload)
    if (seg.start <= step) w = seg.value;
  return w;
}

bool Scenario::is_break(std::size_t step) const {
  return std::find(break_steps.begin(), break_steps.end(), step) != break_steps.end();
}

void validate(const Scenario& s) {
  const auto share = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string("scenario ") + what + " must lie in [0, 1]");
  };
  if (s.steps == 0) throw ValidationError("scenario must have at least one step");
  if (s.window == 0) throw ValidationError("scenario window must be >= 1");
  if (s.workload.empty() || s.workload.front().start != 0)
    throw ValidationError("workload schedule must start at step 0");
  for (std::size_t i = 0; i < s.workload.size(); ++i) {
    share(s.workload[i].value, "workload");
    if (i > 0 && s.workload[i].start <= s.workload[i - 1].start)
      throw ValidationError("workload segments must have increasing start steps");
  }
  share(s.impaired_share, "impaired_share");
  share(s.ar_glasses_share, "ar_glasses_share");
  share(s.initial_fatigue_min, "initial fatigue");
  share(s.initial_fatigue_max, "initial fatigue");
  if (s.initial_fatigue_min > s.initial_fatigue_max) throw ValidationError("initial fatigue range is reversed");
  if (!(s.lux_min >= 0.0) || s.lux_min > s.lux_max) throw ValidationError("ambient lux range is invalid");
  for (const auto& f : kCoefFields)
    if (!std::isfinite(s.coef.*f.member)) throw ValidationError(std::string("coefficient ") + f.name + " is not finite");
}

Scenario builtin_scenario(std::string_view name) {
  Scenario s;
  s.name = std::string(name);
  if (name == "default") {
    s.steps = 100;
    s.workload = {{0, 0.4}, {25, 0.7}, {50, 0.9}, {75, 0.6}};
    s.break_steps = {45, 46, 47, 80, 81};
    s.initial_fatigue_max = 0.2;
    s.lux_min = 50.0;
    s.lux_max = 2000.0;
  } else if (name == "steady") {
    s.steps = 100;
    s.workload = {{0, 0.5}};
    s.initial_fatigue_max = 0.1;
  } else if (name == "short") {
    s.steps = 20;
    s.workload = {{0, 0.6}};
    s.initial_fatigue_max = 0.5;
  } else {
    throw ValidationError("unknown scenario '" + std::string(name) + "'");
  }
  return s;
}

std::vector<std::string> builtin_scenario_names() { return {"default", "steady", "short"}; }

std::string scenario_to_json(const Scenario& s) {
  detail::json j;
  j["name"] = s.name;
  j["steps"] = s.steps;
  j["window"] = s.window;
  detail::json wl = detail::json::array();
  for (const auto& seg : s.workload) wl.push_back({{"start", seg.start}, {"value", seg.value}});
  j["workload"] = wl;
  j["breaks"] = s.break_steps;
  j["impaired_share"] = s.impaired_share;
  j["ar_glasses_share"] = s.ar_glasses_share;
  j["initial_fatigue"] = {s.initial_fatigue_min, s.initial_fatigue_max};
  j["ambient_lux"] = {s.lux_min, s.lux_max};
  j["noise"] = s.noise;
  j["haptic_rises_with_fatigue"] = s.haptic_rises_with_fatigue;
  detail::json coef;
  for (const auto& f : kCoefFields) coef[f.name] = s.coef.*f.member;
  j["coefficients"] = coef;
  return j.dump(2);
}

Scenario scenario_from_json(std::string_view text) {
  try {
    const auto j = detail::json::parse(text);
    Scenario s;
    s.name = j.value("name", std::string("custom"));
    s.steps = j.value("steps", s.steps);
    s.window = j.value("window", s.window);
    if (j.contains("workload")) {
      s.workload.clear();
      for (const auto& seg : j.at("workload"))
        s.workload.push_back({seg.at("start").get<std::size_t>(), seg.at("value").get<double>()});
    }
    if (j.contains("breaks")) s.break_steps = j.at("breaks").get<std::vector<std::size_t>>();
    s.impaired_share = j.value("impaired_share", s.impaired_share);
    s.ar_glasses_share = j.value("ar_glasses_share", s.ar_glasses_share);
    if (j.contains("initial_fatigue")) {
      const auto r = j.at("initial_fatigue").get<std::vector<double>>();
      if (r.size() != 2) throw ValidationError("initial_fatigue must be [min, max]");
      s.initial_fatigue_min = r[0];
      s.initial_fatigue_max = r[1];
    }
    if (j.contains("ambient_lux")) {
      const auto r = j.at("ambient_lux").get<std::vector<double>>();
      if (r.size() != 2) throw ValidationError("ambient_lux must be [min, max]");
      s.lux_min = r[0];
      s.lux_max = r[1];
    }
    s.noise = j.value("noise", s.noise);
    s.haptic_rises_with_fatigue = j.value("haptic_rises_with_fatigue", s.haptic_rises_with_fatigue);
    if (j.contains("coefficients")) {
      for (const auto& [key, value] : j.at("coefficients").items()) {
        bool found = false;
        for (const auto& f : kCoefFields)
          if (key == f.name) {
            s.coef.*f.member = value.get<double>();
            found = true;
          }
        if (!found) throw ValidationError("unknown coefficient '" + key + "'");
      }
    }
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& name_or_path) {
  if (name_or_path.size() >= 5 && name_or_path.ends_with(".json")) {
    std::ifstream in(name_or_path);
    if (!in) throw ValidationError("cannot open scenario file " + name_or_path);
    std::ostringstream os;
    os << in.rdbuf();
    return scenario_from_json(os.str());
  }
  return builtin_scenario(name_or_path);
}

// ---------------------------------------------------------------------------
// User model

int fatigue_level(double fatigue) noexcept {
  if (fatigue < 1.0 / 3.0) return 0;
  if (fatigue < 2.0 / 3.0) return 1;
  return 2;
}

InterfaceConfig target_config(int level, bool haptic_rises_with_fatigue) {
  if (level < 0 || level > 2) throw ValidationError("fatigue level out of range: " + std::to_string(level));
  return {level, 2 - level, level, haptic_rises_with_fatigue ? level : 2 - level};
}

double mismatch(const InterfaceConfig& config, const InterfaceConfig& target) {
  int total = 0;
  for (std::size_t i = 0; i < 4; ++i) total += std::abs(config[i] - target[i]);
  return static_cast<double>(total) / 8.0;
}

double next_fatigue(double fatigue, double workload, double mismatch, Profile profile, bool rest,
                    double xi, const SimCoefficients& c) {
  const double sensitivity = profile == Profile::impaired ? c.impaired_sensitivity : 1.0;
  return clamp01(fatigue + c.workload_gain * workload + c.mismatch_gain * mismatch * sensitivity -
                 c.rest_relief * (rest ? 1.0 : 0.0) + c.fatigue_noise * xi);
}

std::pair<SimUserState, StepOutcome> step_user(const SimUserState& state, const InterfaceConfig& config,
                                               const Scenario& sc, std::size_t step, Rng& rng) {
  if (!is_valid(config)) throw ValidationError("interface config out of range: " + to_string(config));
  const auto& c = sc.coef;
  const double on = sc.noise ? 1.0 : 0.0;
  // Draw count per step is independent of the noise switch and the config.
  const auto xi = [&] { return on * rng.normal(); };

  const double f = state.fatigue;
  StepOutcome out;
  out.level = fatigue_level(f);
  out.mismatch = mismatch(config, target_config(out.level, sc.haptic_rises_with_fatigue));
  const double m = out.mismatch;

  out.frames.reserve(sc.window);
  const double t0 = state.elapsed_minutes * 60.0;
  const double blink_p = (c.blink_base_per_min + c.blink_gain_per_min * f) / 60.0;
  for (std::size_t i = 0; i < sc.window; ++i) {
    SensorFrame fr;
    fr.t = t0 + static_cast<double>(i);
    fr.hr_bpm = std::clamp(c.hr_base + c.hr_gain * f + c.hr_noise * xi(), 20.0, 250.0);
    fr.blink = rng.bernoulli(blink_p);
    fr.gaze_speed = std::max(0.0, c.gaze_base * (1.0 - c.gaze_drop * f) + c.gaze_noise * xi());
    fr.pupil_mm = std::clamp(c.pupil_base + c.pupil_gain * f + c.pupil_noise * xi(), 1.0, 9.0);
    fr.gsr_us = std::clamp(c.gsr_base + c.gsr_gain * f + c.gsr_noise * xi(), 0.0, 40.0);
    fr.task_minutes = state.elapsed_minutes + static_cast<double>(i) / 60.0;
    fr.device = state.device;
    fr.ambient_lux = state.ambient_lux;
    fr.label = out.level;
    out.frames.push_back(fr);
  }

  out.reward_inputs.error_rate =
      clamp01(c.error_base + c.error_fatigue * f + c.error_mismatch * m + c.error_noise * xi());
  out.reward_inputs.completion_time_norm =
      clamp01(c.time_base + c.time_fatigue * f + c.time_mismatch * m + c.time_noise * xi());
  out.tlx = 100.0 * clamp01(c.tlx_fatigue * f + c.tlx_mismatch * m + c.tlx_noise * xi());
  out.satisfaction =
      std::clamp(c.sat_base - c.sat_fatigue * f - c.sat_mismatch * m + c.sat_noise * xi(), 1.0, 5.0);
  out.reward_inputs.satisfaction = out.satisfaction;

  SimUserState next = state;
  next.workload = sc.workload_at(step);
  next.fatigue = next_fatigue(f, next.workload, m, state.profile, sc.is_break(step), xi(), c);
  next.elapsed_minutes = state.elapsed_minutes + static_cast<double>(sc.window) / 60.0;
  return {next, std::move(out)};
}

SimUserState initial_state(const Scenario& sc, Rng& rng) {
  SimUserState s;
  s.profile = rng.bernoulli(sc.impaired_share) ? Profile::impaired : Profile::typical;
  s.device = rng.bernoulli(sc.ar_glasses_share) ? Device::ar_glasses : Device::watch;
  s.ambient_lux = rng.uniform(sc.lux_min, sc.lux_max);
  s.fatigue = rng.uniform(sc.initial_fatigue_min, sc.initial_fatigue_max);
  s.workload = sc.workload_at(0);
  return s;
}

// ---------------------------------------------------------------------------
// Controllers

ActionId OracleController::act(const Observation& obs) {
  const InterfaceConfig target = target_config(obs.level, haptic_rises_);
  for (std::size_t p = 0; p < 4; ++p) {
    if (obs.config[p] > target[p]) return {1 + 2 * p};
    if (obs.config[p] < target[p]) return {2 + 2 * p};
  }
  return kKeep;
}

ActionId GreedyController::act(const Observation& obs) {
  return table_.greedy(encode_state(obs.level, obs.config), feasible_actions(obs.config));
}

ActionId RandomWalkController::act(const Observation& obs) {
  if (!rng_.bernoulli(p_move_)) return kKeep;
  const ActionMask mask = feasible_actions(obs.config);
  std::size_t pick = rng_.index(mask.count() - 1);
  for (std::size_t a = 1; a < kNumActions; ++a)
    if (mask.test(a) && pick-- == 0) return {a};
  return kKeep;
}

// ---------------------------------------------------------------------------
// Episodes

EpisodeTrace run_episode(const Scenario& sc, Controller& controller, std::uint64_t seed,
                         LevelObserver* observer, const EpisodeOptions& options) {
  validate(sc);
  TrueLevelObserver truth;
  if (!observer) observer = &truth;
  const Rng root(seed);
  Rng setup = root.split(2);
  Rng noise = root.split(1);

  EpisodeTrace trace;
  trace.seed = seed;
  SimUserState user = initial_state(sc, setup);
  trace.profile = user.profile;
  trace.device = user.device;

  Observation obs{observer->initial(user), options.start};
  for (std::size_t t = 0; t < sc.steps; ++t) {
    const StateId s = encode_state(obs.level, obs.config);
    const ActionId a = controller.act(obs);
    const InterfaceConfig config = apply_action(obs.config, a);
    auto [next, outcome] = step_user(user, config, sc, t, noise);

    StepRecord rec;
    rec.step = t;
    rec.state = s;
    rec.action = a;
    rec.config = config;
    rec.true_level = outcome.level;
    rec.observed_level = obs.level;
    rec.fatigue = user.fatigue;
    rec.reward = compute_reward(outcome.reward_inputs);
    rec.tlx = outcome.tlx;
    rec.satisfaction = outcome.satisfaction;
    rec.fitness = 1.0 - outcome.mismatch;
    trace.steps.push_back(rec);

    obs = Observation{observer->observe(outcome, next), config};
    if (options.keep_frames)
      trace.frames.insert(trace.frames.end(), outcome.frames.begin(), outcome.frames.end());
    user = next;
  }
  return trace;
}

std::string trace_csv_header() {
  return "condition,episode,step,state,action,text,notif,contrast,haptic,true_level,observed_level,"
         "fatigue,reward,tlx,satisfaction,fitness\n";
}

std::string trace_csv_rows(const EpisodeTrace& trace, std::string_view condition, std::size_t episode) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& r : trace.steps) {
    os << condition << ',' << episode << ',' << r.step << ',' << r.state.id << ',' << r.action.id << ','
       << r.config.text_size << ',' << r.config.notif_freq << ',' << r.config.contrast << ','
       << r.config.haptic << ',' << r.true_level << ',' << r.observed_level << ',' << r.fatigue << ','
       << r.reward << ',' << r.tlx << ',' << r.satisfaction << ',' << r.fitness << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// SimEnvironment

SimEnvironment::SimEnvironment(Scenario scenario, bool randomize_start)
    : scenario_(std::move(scenario)), randomize_start_(randomize_start) {
  validate(scenario_);
}

Observation SimEnvironment::reset(std::uint64_t seed) {
  const Rng root(seed);
  Rng setup = root.split(2);
  noise_ = root.split(1);
  user_ = initial_state(scenario_, setup);
  config_ = InterfaceConfig::uniform(1);
  if (randomize_start_)
    for (std::size_t p = 0; p < 4; ++p) config_[p] = static_cast<int>(setup.index(3));
  t_ = 0;
  return {fatigue_level(user_.fatigue), config_};
}

StepResult SimEnvironment::step(ActionId action) {
  config_ = apply_action(config_, action);
  auto [next, outcome] = step_user(user_, config_, scenario_, t_, noise_);
  user_ = next;
  ++t_;
  return {{fatigue_level(user_.fatigue), config_}, outcome.reward_inputs, t_ >= scenario_.steps};
}

}  // namespace fatigue
