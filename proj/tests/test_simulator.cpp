#include <gtest/gtest.h>

#include <algorithm>

#include "fatigue/errors.hpp"
#include "fatigue/harness.hpp"
#include "fatigue/simulator.hpp"

using namespace fatigue;

namespace {

Scenario quiet(Scenario s) {
  s.noise = false;
  return s;
}

SimUserState user_at(double fatigue, Profile p = Profile::typical) {
  SimUserState s;
  s.fatigue = fatigue;
  s.profile = p;
  return s;
}

double median_fitness(const EpisodeTrace& t) {
  std::vector<double> v;
  for (const auto& r : t.steps) v.push_back(r.fitness);
  return median(v);
}

}  // namespace

TEST(Target, PerLevel) {
  EXPECT_EQ(target_config(0), (InterfaceConfig{0, 2, 0, 2}));
  EXPECT_EQ(target_config(1), InterfaceConfig::uniform(1));
  EXPECT_EQ(target_config(2), (InterfaceConfig{2, 0, 2, 0}));
  EXPECT_EQ(target_config(2, true), (InterfaceConfig{2, 0, 2, 2}));
  EXPECT_THROW(target_config(3), ValidationError);
}

TEST(Target, Mismatch) {
  EXPECT_EQ(mismatch(target_config(0), target_config(0)), 0.0);
  EXPECT_EQ(mismatch(target_config(0), target_config(2)), 1.0);
  EXPECT_EQ(mismatch(InterfaceConfig::uniform(1), target_config(2)), 0.5);
  EXPECT_EQ(mismatch({2, 2, 1, 0}, target_config(2)), 0.375);
}

TEST(Levels, Thresholds) {
  EXPECT_EQ(fatigue_level(0.0), 0);
  EXPECT_EQ(fatigue_level(0.33), 0);
  EXPECT_EQ(fatigue_level(1.0 / 3.0), 1);
  EXPECT_EQ(fatigue_level(0.66), 1);
  EXPECT_EQ(fatigue_level(2.0 / 3.0), 2);
  EXPECT_EQ(fatigue_level(1.0), 2);
}

TEST(Dynamics, RestRelievesFatigueDownToZero) {
  const SimCoefficients c;
  EXPECT_LT(next_fatigue(0.5, 0.0, 0.0, Profile::typical, true, 0.0, c), 0.5);
  EXPECT_EQ(next_fatigue(0.01, 0.0, 0.0, Profile::typical, true, 0.0, c), 0.0);
}

TEST(Dynamics, ImpairedProfileAmplifiesMismatch) {
  const SimCoefficients c;
  const double typical = next_fatigue(0.2, 0.5, 0.5, Profile::typical, false, 0.0, c) - 0.2;
  const double impaired = next_fatigue(0.2, 0.5, 0.5, Profile::impaired, false, 0.0, c) - 0.2;
  EXPECT_NEAR(impaired - typical, 0.5 * c.mismatch_gain * 0.5, 1e-12);
}

TEST(Dynamics, RestedMatchedUserOutcome) {
  const Scenario sc = quiet(builtin_scenario("steady"));
  Rng rng(1);
  const auto [next, out] = step_user(user_at(0.0), target_config(0), sc, 0, rng);
  EXPECT_EQ(out.tlx, 0.0);
  EXPECT_EQ(out.satisfaction, 5.0);
  EXPECT_DOUBLE_EQ(out.reward_inputs.error_rate, sc.coef.error_base);
  EXPECT_EQ(out.mismatch, 0.0);
  EXPECT_EQ(out.frames.size(), sc.window);
}

TEST(Dynamics, SaturatesUnderMaximalLoad) {
  Scenario sc = quiet(builtin_scenario("steady"));
  sc.workload = {{0, 1.0}};
  const auto worst = [](int level) { return target_config(level == 0 ? 2 : 0); };
  // oracle: iterate the recurrence by hand
  const auto& c = sc.coef;
  double f = 0.0;
  std::size_t expected = 0;
  while (f < 1.0) {
    const double m = fatigue_level(f) == 1 ? 0.5 : 1.0;
    f = std::min(1.0, f + c.workload_gain + c.mismatch_gain * c.impaired_sensitivity * m);
    ++expected;
  }
  EXPECT_LE(expected, 20u);
  SimUserState u = user_at(0.0, Profile::impaired);
  Rng rng(2);
  std::size_t steps = 0;
  while (u.fatigue < 1.0 && steps < 100) u = step_user(u, worst(fatigue_level(u.fatigue)), sc, steps++, rng).first;
  EXPECT_EQ(steps, expected);
}

TEST(Dynamics, OutcomesMonotoneInMismatch) {
  const Scenario sc = quiet(builtin_scenario("steady"));
  const SimUserState u = user_at(0.1);
  double prev_tlx = -1.0, prev_sat = 6.0, prev_f = -1.0;
  for (const InterfaceConfig c : {InterfaceConfig{0, 2, 0, 2}, InterfaceConfig{1, 2, 0, 2},
                                  InterfaceConfig{1, 1, 1, 1}, InterfaceConfig{2, 1, 1, 1},
                                  InterfaceConfig{2, 0, 2, 0}}) {
    Rng rng(3);
    const auto [next, out] = step_user(u, c, sc, 0, rng);
    EXPECT_GT(out.tlx, prev_tlx);
    EXPECT_LT(out.satisfaction, prev_sat);
    EXPECT_GT(next.fatigue, prev_f);
    prev_tlx = out.tlx;
    prev_sat = out.satisfaction;
    prev_f = next.fatigue;
  }
}

TEST(Dynamics, RejectsInvalidConfig) {
  Rng rng(4);
  EXPECT_THROW(step_user(user_at(0.0), {3, 0, 0, 0}, builtin_scenario("short"), 0, rng), ValidationError);
}

TEST(Episodes, DeterministicPerSeed) {
  const Scenario sc = builtin_scenario("short");
  RandomWalkController a(Rng(7)), b(Rng(7));
  const auto ta = run_episode(sc, a, 11), tb = run_episode(sc, b, 11);
  EXPECT_EQ(trace_csv_rows(ta, "x", 0), trace_csv_rows(tb, "x", 0));
  EXPECT_EQ(write_session(ta.frames), write_session(tb.frames));
  StaticController s;
  EXPECT_NE(trace_csv_rows(run_episode(sc, s, 11), "x", 0), trace_csv_rows(run_episode(sc, s, 12), "x", 0));
}

TEST(Episodes, StaticNeverChangesConfig) {
  StaticController s;
  EpisodeOptions opt;
  opt.start = {2, 0, 1, 2};
  const auto t = run_episode(builtin_scenario("default"), s, 5, nullptr, opt);
  ASSERT_FALSE(t.steps.empty());
  for (const auto& r : t.steps) {
    EXPECT_EQ(r.config, opt.start);
    EXPECT_EQ(r.action, kKeep);
  }
}

TEST(Episodes, FramesAreValidAndLabelled) {
  RandomWalkController c(Rng(8));
  const Scenario sc = builtin_scenario("short");
  const auto t = run_episode(sc, c, 3);
  ASSERT_EQ(t.frames.size(), sc.steps * sc.window);
  for (std::size_t i = 0; i < t.frames.size(); ++i) {
    EXPECT_NO_THROW(validate_frame(t.frames[i]));
    EXPECT_EQ(t.frames[i].label, t.steps[i / sc.window].true_level);
  }
  EXPECT_EQ(parse_session(write_session(t.frames)).size(), t.frames.size());
}

TEST(Episodes, OracleBeatsEveryStaticInterface) {
  const Scenario sc = builtin_scenario("default");
  for (std::uint64_t seed : {1, 2, 3}) {
    OracleController oracle;
    const double best = median_fitness(run_episode(sc, oracle, seed));
    for (std::size_t id = 0; id < 81; ++id) {
      EpisodeOptions opt;
      opt.start = decode_state(StateId{id}).config;
      opt.keep_frames = false;
      StaticController s;
      EXPECT_GE(best, median_fitness(run_episode(sc, s, seed, nullptr, opt))) << to_string(opt.start);
    }
  }
}

TEST(Episodes, FitnessIsOneMinusMismatch) {
  OracleController oracle;
  const auto t = run_episode(builtin_scenario("short"), oracle, 4);
  for (const auto& r : t.steps) EXPECT_DOUBLE_EQ(r.fitness, 1.0 - mismatch(r.config, target_config(r.true_level)));
}

TEST(Scenarios, JsonRoundTrip) {
  for (const auto& name : builtin_scenario_names()) {
    const Scenario s = builtin_scenario(name);
    EXPECT_EQ(scenario_to_json(scenario_from_json(scenario_to_json(s))), scenario_to_json(s));
  }
  EXPECT_THROW(builtin_scenario("nope"), ValidationError);
  EXPECT_THROW(scenario_from_json("{\"steps\": 0}"), ValidationError);
}

TEST(Scenarios, WorkloadSchedule) {
  Scenario s;
  s.workload = {{0, 0.2}, {10, 0.8}};
  s.break_steps = {5};
  EXPECT_EQ(s.workload_at(0), 0.2);
  EXPECT_EQ(s.workload_at(9), 0.2);
  EXPECT_EQ(s.workload_at(10), 0.8);
  EXPECT_TRUE(s.is_break(5));
  EXPECT_FALSE(s.is_break(6));
}

TEST(Environment, ResetAndStepAgreeWithEpisodes) {
  SimEnvironment env(builtin_scenario("short"), false);
  const auto obs = env.reset(9);
  EXPECT_EQ(obs.config, InterfaceConfig::uniform(1));
  std::size_t n = 0;
  bool done = false;
  while (!done) {
    const auto r = env.step(kKeep);
    EXPECT_GE(compute_reward(r.reward_inputs), 0.0);
    done = r.done;
    ++n;
  }
  EXPECT_EQ(n, env.episode_length());
}
