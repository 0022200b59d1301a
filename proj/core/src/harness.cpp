#include "fatigue/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "fatigue/errors.hpp"
#include "json_util.hpp"

#ifndef FATIGUE_DATA_DIR
#define FATIGUE_DATA_DIR "data"
#endif

namespace fs = std::filesystem;

namespace fatigue {

namespace {

constexpr std::uint64_t kStreamGenerate = 1;
constexpr std::uint64_t kStreamDetector = 2;
constexpr std::uint64_t kStreamPolicy = 3;
constexpr std::uint64_t kStreamEvaluate = 4;
constexpr std::uint64_t kStreamDenoiser = 6;
constexpr std::uint64_t kStreamSentiment = 7;
constexpr std::uint64_t kStreamHoldout = 8;

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots so the outcome is independent of scheduling.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

std::string numbered(std::string_view prefix, std::size_t i) {
  std::ostringstream os;
  os << prefix << std::setw(4) << std::setfill('0') << i << ".jsonl";
  return os.str();
}

const std::array<Modality, 4>& ablations() { return kModalities; }

std::string ablation_condition(Modality m) { return std::string(modality_name(m)) + "_only"; }

std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || base.empty()) return p;
  return (base / path).lexically_normal().string();
}

Denoiser train_one_denoiser(std::size_t channels, const ExperimentConfig& cfg, Rng rng) {
  Rng corpus_rng = rng.split(1);
  Rng train_rng = rng.split(2);
  const auto corpus = make_denoise_corpus(cfg.denoise_corpus, kDefaultWindow, channels, 0.3, corpus_rng);
  Denoiser d = Denoiser::identity(channels);
  train_denoiser(d, corpus, cfg.denoiser, train_rng);
  return d;
}

}  // namespace

std::string default_sentiment_data_path() { return std::string(FATIGUE_DATA_DIR) + "/sentiment_seed.csv"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, std::string_view content) {
  const fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Config

namespace {

void validate_fields(const ExperimentConfig& c) {
  if (c.seeds.empty()) throw ValidationError("config needs at least one seed");
  if (c.out.empty()) throw ValidationError("config needs an output directory");
  if (c.static_level < 0 || c.static_level > 2) throw ValidationError("static_level must be 0, 1 or 2");
  if (c.detector.batch == 0) throw ValidationError("detector batch must be >= 1");
  if (!(c.detector.lr > 0.0)) throw ValidationError("detector lr must be positive");
  if (!(c.policy.alpha >= 0.0 && c.policy.alpha <= 1.0)) throw ValidationError("policy alpha must lie in [0, 1]");
  if (!(c.policy.gamma >= 0.0 && c.policy.gamma < 1.0)) throw ValidationError("policy gamma must lie in [0, 1)");
  for (double e : {c.policy.eps_start, c.policy.eps_end})
    if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("epsilon must lie in [0, 1]");
}

}  // namespace

void validate(const ExperimentConfig& c) {
  validate_fields(c);
  load_scenario(c.scenario);
}

ExperimentConfig config_from_json(std::string_view text) {
  static const std::vector<std::string> known = {
      "scenario",   "seeds",     "out",         "generate_episodes", "holdout_episodes",
      "eval_episodes", "static_level", "detector", "denoise",         "denoise_corpus",
      "denoiser",   "policy_episodes", "policy", "sentiment_data",    "sentiment",
      "threads"};
  try {
    const auto j = detail::json::parse(text);
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw ValidationError("unknown config key '" + key + "'");
    ExperimentConfig c;
    c.scenario = j.value("scenario", c.scenario);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.out = j.value("out", c.out);
    c.generate_episodes = j.value("generate_episodes", c.generate_episodes);
    c.holdout_episodes = j.value("holdout_episodes", c.holdout_episodes);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.static_level = j.value("static_level", c.static_level);
    if (j.contains("detector")) {
      const auto& d = j.at("detector");
      c.detector.lr = d.value("lr", c.detector.lr);
      c.detector.epochs = d.value("epochs", c.detector.epochs);
      c.detector.batch = d.value("batch", c.detector.batch);
    }
    c.denoise = j.value("denoise", c.denoise);
    c.denoise_corpus = j.value("denoise_corpus", c.denoise_corpus);
    if (j.contains("denoiser")) {
      const auto& d = j.at("denoiser");
      c.denoiser.lr = d.value("lr", c.denoiser.lr);
      c.denoiser.epochs = d.value("epochs", c.denoiser.epochs);
      c.denoiser.batch = d.value("batch", c.denoiser.batch);
    }
    c.policy_episodes = j.value("policy_episodes", c.policy_episodes);
    if (j.contains("policy")) {
      const auto& p = j.at("policy");
      c.policy.alpha = p.value("alpha", c.policy.alpha);
      c.policy.gamma = p.value("gamma", c.policy.gamma);
      c.policy.eps_start = p.value("eps_start", c.policy.eps_start);
      c.policy.eps_end = p.value("eps_end", c.policy.eps_end);
      if (p.contains("reward_weights")) {
        const auto w = p.at("reward_weights").get<std::vector<double>>();
        if (w.size() != 3) throw ValidationError("reward_weights must have 3 entries");
        c.policy.reward = {w[0], w[1], w[2]};
      }
    }
    c.sentiment_data = j.value("sentiment_data", c.sentiment_data);
    if (j.contains("sentiment")) {
      const auto& s = j.at("sentiment");
      c.sentiment.lr = s.value("lr", c.sentiment.lr);
      c.sentiment.epochs = s.value("epochs", c.sentiment.epochs);
    }
    c.threads = j.value("threads", c.threads);
    validate_fields(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig c = config_from_json(read_file(path));
  const auto j = detail::json::parse(read_file(path));
  const fs::path base = fs::path(path).parent_path();
  if (c.scenario.ends_with(".json")) c.scenario = resolve(base, c.scenario);
  if (j.contains("sentiment_data")) c.sentiment_data = resolve(base, c.sentiment_data);
  c.out = resolve(base, c.out);
  validate(c);
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  detail::json j;
  j["scenario"] = c.scenario;
  j["seeds"] = c.seeds;
  j["out"] = c.out;
  j["generate_episodes"] = c.generate_episodes;
  j["holdout_episodes"] = c.holdout_episodes;
  j["eval_episodes"] = c.eval_episodes;
  j["static_level"] = c.static_level;
  j["detector"] = {{"lr", c.detector.lr}, {"epochs", c.detector.epochs}, {"batch", c.detector.batch}};
  j["denoise"] = c.denoise;
  j["denoise_corpus"] = c.denoise_corpus;
  j["denoiser"] = {{"lr", c.denoiser.lr}, {"epochs", c.denoiser.epochs}, {"batch", c.denoiser.batch}};
  j["policy_episodes"] = c.policy_episodes;
  j["policy"] = {{"alpha", c.policy.alpha},
                 {"gamma", c.policy.gamma},
                 {"eps_start", c.policy.eps_start},
                 {"eps_end", c.policy.eps_end},
                 {"reward_weights", {c.policy.reward.completion, c.policy.reward.errors, c.policy.reward.satisfaction}}};
  j["sentiment_data"] = c.sentiment_data;
  j["sentiment"] = {{"lr", c.sentiment.lr}, {"epochs", c.sentiment.epochs}};
  j["threads"] = c.threads;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Metrics

double median(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

MetricsRecord aggregate(std::string condition, std::optional<double> accuracy,
                        std::span<const EpisodeTrace> traces) {
  std::vector<double> fitness;
  double tlx = 0.0, sat = 0.0;
  for (const auto& tr : traces)
    for (const auto& r : tr.steps) {
      fitness.push_back(r.fitness);
      tlx += r.tlx;
      sat += r.satisfaction;
    }
  if (fitness.empty()) throw ValidationError("no steps to aggregate for " + condition);
  const double n = static_cast<double>(fitness.size());
  return {std::move(condition), accuracy, median(std::move(fitness)), tlx / n, sat / n};
}

std::string metrics_csv(std::span<const MetricsRecord> rows) {
  std::ostringstream os;
  os.precision(17);
  os << "condition,accuracy,adaptability,tlx,satisfaction\n";
  for (const auto& r : rows) {
    os << r.condition << ',';
    if (r.accuracy) os << *r.accuracy;
    os << ',' << r.adaptability << ',' << r.tlx << ',' << r.satisfaction << '\n';
  }
  return os.str();
}

std::string metrics_table(std::span<const MetricsRecord> rows) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "Model" << std::right << std::setw(14) << "Accuracy (%)"
     << std::setw(14) << "Adaptability" << std::setw(28) << "Cognitive Load (NASA-TLX)" << std::setw(14)
     << "Satisfaction" << '\n';
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::left << std::setw(12) << r.condition << std::right << std::setw(14);
    if (r.accuracy)
      os << std::setprecision(1) << 100.0 * *r.accuracy;
    else
      os << "-";
    os << std::setw(14) << std::setprecision(2) << r.adaptability << std::setw(28) << std::setprecision(1)
       << r.tlx << std::setw(14) << std::setprecision(2) << r.satisfaction << '\n';
  }
  return os.str();
}

std::string deltas_csv(std::span<const MetricsRecord> rows, std::string_view baseline) {
  const auto base = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.condition == baseline; });
  if (base == rows.end()) throw ValidationError("baseline condition '" + std::string(baseline) + "' not present");
  std::ostringstream os;
  os.precision(17);
  os << "condition,baseline,adaptability_diff,tlx_change_pct,satisfaction_change_pct\n";
  for (const auto& r : rows) {
    if (r.condition == baseline) continue;
    os << r.condition << ',' << baseline << ',' << (r.adaptability - base->adaptability) << ','
       << 100.0 * (r.tlx - base->tlx) / base->tlx << ','
       << 100.0 * (r.satisfaction - base->satisfaction) / base->satisfaction << '\n';
  }
  return os.str();
}

int DetectorObserver::observe(const StepOutcome& outcome, const SimUserState&) {
  Window w;
  w.frames = outcome.frames;
  return detector_.estimate(w).level;
}

// ---------------------------------------------------------------------------
// Commands

std::vector<Window> load_windows(const std::string& dir, std::string_view prefix, std::size_t window) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw ValidationError("data directory " + dir + " does not exist");
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with(prefix) && name.ends_with(".jsonl")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Window> out;
  for (const auto& f : files) {
    const auto frames = read_session_file(f.string());
    auto w = window_stream(frames, window, window);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

GenerateSummary cmd_generate(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream& log) {
  const Scenario sc = load_scenario(cfg.scenario);
  const fs::path data = fs::path(cfg.out) / "data";
  std::error_code ec;
  fs::create_directories(data, ec);
  if (ec || !fs::is_directory(data)) throw Error("cannot create output directory " + data.string());

  struct Part {
    std::string prefix;
    std::size_t episodes;
    std::uint64_t stream;
  };
  const Part parts[] = {{"episode_", cfg.generate_episodes, kStreamGenerate},
                        {"holdout_", cfg.holdout_episodes, kStreamHoldout}};
  GenerateSummary summary;
  detail::json manifest;
  manifest["seed"] = seed;
  manifest["scenario"] = sc.name;
  manifest["steps_per_episode"] = sc.steps;
  manifest["window"] = sc.window;
  for (const auto& part : parts) {
    const Rng root = Rng(seed).split(part.stream);
    std::vector<std::array<std::size_t, kLevels>> counts(part.episodes);
    std::vector<std::string> names(part.episodes);
    parallel_for(part.episodes, cfg.threads, [&](std::size_t e) {
      const std::uint64_t ep_seed = root.split(e).key();
      RandomWalkController behaviour(Rng(ep_seed).split(3));
      const EpisodeTrace tr = run_episode(sc, behaviour, ep_seed);
      for (const auto& r : tr.steps) ++counts[e][static_cast<std::size_t>(r.true_level)];
      names[e] = numbered(part.prefix, e);
      write_file((data / names[e]).string(), write_session(tr.frames));
    });
    std::array<std::size_t, kLevels> total{};
    for (const auto& c : counts)
      for (std::size_t l = 0; l < kLevels; ++l) total[l] += c[l];
    const std::size_t windows = total[0] + total[1] + total[2];
    const std::string key = part.prefix == "episode_" ? "train" : "holdout";
    manifest["files"][key] = names;
    manifest["episodes"][key] = part.episodes;
    manifest["windows"][key] = windows;
    manifest["class_counts"][key] = total;
    if (key == "train") {
      summary.episodes = part.episodes;
      summary.windows = windows;
      summary.class_counts = total;
    }
    log << "generate: " << part.episodes << ' ' << key << " episodes, " << windows << " windows (low "
        << total[0] << ", medium " << total[1] << ", high " << total[2] << ")\n";
  }
  write_file((data / "manifest.json").string(), manifest.dump(2) + "\n");
  return summary;
}

double cmd_train_policy(const ExperimentConfig& cfg, std::ostream& log) {
  const Scenario sc = load_scenario(cfg.scenario);
  const fs::path out(cfg.out);
  SimEnvironment env(sc, true);
  const PolicyTraining pt = train_policy(env, cfg.policy_episodes, cfg.policy, Rng(cfg.run_seed()).split(kStreamPolicy).key());
  write_file((out / "models" / "qtable.json").string(), qtable_to_json(pt.table) + "\n");
  write_file((out / "logs" / "policy_train.csv").string(), policy_log_csv(pt.log));
  double tail = 0.0;
  const std::size_t n = std::max<std::size_t>(1, pt.log.size() / 10);
  for (std::size_t i = pt.log.size() - std::min(n, pt.log.size()); i < pt.log.size(); ++i) tail += pt.log[i].episode_return;
  tail = pt.log.empty() ? 0.0 : tail / static_cast<double>(std::min(n, pt.log.size()));
  log << "train-policy: " << cfg.policy_episodes << " episodes, mean return over last "
      << std::min(n, pt.log.size()) << " episodes " << tail << '\n';
  return tail;
}

TrainSummary cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  const Scenario sc = load_scenario(cfg.scenario);
  const fs::path out(cfg.out);
  const std::uint64_t seed = cfg.run_seed();
  const auto windows = load_windows((out / "data").string(), "episode_", sc.window);
  if (windows.empty()) throw ValidationError("no training windows under " + (out / "data").string());
  const auto labeled = label_windows(windows);
  log << "train: " << labeled.size() << " labelled windows\n";

  std::optional<std::pair<Denoiser, Denoiser>> denoisers;
  if (cfg.denoise) {
    const Rng dn = Rng(seed).split(kStreamDenoiser);
    denoisers.emplace(train_one_denoiser(3, cfg, dn.split(0)), train_one_denoiser(1, cfg, dn.split(1)));
  }

  // model 0 is multimodal, 1..4 are the single-modality detectors it is fused from
  std::vector<ModalityMask> masks{kAllModalities};
  std::vector<std::string> names{"detector"};
  for (auto m : ablations()) {
    masks.push_back(only(m));
    names.push_back("detector_" + std::string(modality_name(m)));
  }
  const Rng det_root = Rng(seed).split(kStreamDetector);
  std::vector<std::optional<Detector>> models(masks.size());
  std::vector<TrainingLog> logs(masks.size());
  parallel_for(masks.size() - 1, cfg.threads, [&](std::size_t i) {
    const std::size_t k = i + 1;
    const Rng root = det_root.split(k);
    Rng init = root.split(1);
    Rng shuffle = root.split(2);
    Detector d(DetectorOptions{sc.window, kEmbeddingDim, masks[k]}, init);
    if (denoisers) d.set_denoisers(denoisers->first, denoisers->second);
    logs[k] = train_detector(d, labeled, cfg.detector, shuffle);
    models[k].emplace(std::move(d));
  });
  {
    std::vector<const Detector*> unimodal;
    for (std::size_t k = 1; k < models.size(); ++k) unimodal.push_back(&*models[k]);
    Rng fusion_rng = det_root.split(0);
    TrainedDetector fused = fuse_detectors(unimodal, labeled, cfg.detector, fusion_rng);
    logs[0] = std::move(fused.log);
    models[0].emplace(std::move(fused.model));
  }

  TrainSummary summary;
  for (std::size_t k = 0; k < masks.size(); ++k) {
    for (const auto& w : logs[k].warnings) log << "warning (" << names[k] << "): " << w << '\n';
    write_file((out / "models" / (names[k] + ".json")).string(), detector_to_json(*models[k]) + "\n");
    write_file((out / "logs" / (names[k] + "_train.csv")).string(), training_log_csv(logs[k]));
    const double acc = evaluate_detector(*models[k], labeled).accuracy;
    if (k == 0) {
      summary.detector_train_accuracy = acc;
      const auto fw = models[k]->fusion().weights().normalized();
      log << "train: multimodal training accuracy " << acc << ", normalized fusion weights (" << fw[0] << ", "
          << fw[1] << ", " << fw[2] << ", " << fw[3] << ")\n";
    } else {
      summary.ablation_train_accuracy.emplace_back(names[k], acc);
      log << "train: " << names[k] << " training accuracy " << acc << '\n';
    }
  }

  summary.final_policy_return = cmd_train_policy(cfg, log);

  const auto examples = load_sentiment_csv(cfg.sentiment_data);
  std::vector<SentimentExample> train, test;
  for (const auto& ex : examples) (ex.test ? test : train).push_back(ex);
  Rng srng = Rng(seed).split(kStreamSentiment);
  const SentimentModel sm = train_sentiment(train, cfg.sentiment, srng);
  summary.sentiment_test_accuracy = test.empty() ? 0.0 : sentiment_accuracy(sm, test);
  write_file((out / "models" / "sentiment.json").string(), sentiment_to_json(sm) + "\n");
  log << "train: sentiment held-out accuracy " << summary.sentiment_test_accuracy << '\n';
  return summary;
}

EvaluateSummary cmd_evaluate(const ExperimentConfig& cfg, std::ostream& log) {
  const Scenario sc = load_scenario(cfg.scenario);
  const fs::path out(cfg.out);
  const fs::path models_dir = out / "models";
  const auto load_detector = [&](const std::string& name) {
    const auto path = (models_dir / (name + ".json")).string();
    if (!fs::exists(path)) throw ValidationError("missing artifact " + path + " (run train first)");
    return detector_from_json(read_file(path));
  };
  const auto qpath = (models_dir / "qtable.json").string();
  if (!fs::exists(qpath)) throw ValidationError("missing artifact " + qpath + " (run train first)");
  const QTable table = qtable_from_json(read_file(qpath));

  struct Condition {
    std::string name;
    std::optional<Detector> detector;
  };
  std::vector<Condition> conditions;
  conditions.push_back({"adaptive", load_detector("detector")});
  conditions.push_back({"static", std::nullopt});
  for (auto m : ablations())
    conditions.push_back({ablation_condition(m), load_detector("detector_" + std::string(modality_name(m)))});

  std::vector<LabeledWindow> holdout;
  if (fs::is_directory(out / "data")) holdout = label_windows(load_windows((out / "data").string(), "holdout_", sc.window));

  const std::size_t per_seed = cfg.eval_episodes;
  const std::size_t total = per_seed * cfg.seeds.size();
  if (total == 0) throw ValidationError("evaluation needs at least one episode");
  std::vector<std::uint64_t> episode_seeds(total);
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
    for (std::size_t e = 0; e < per_seed; ++e)
      episode_seeds[s * per_seed + e] = Rng(cfg.seeds[s]).split(kStreamEvaluate).split(e).key();

  EvaluateSummary summary;
  std::string traces_csv = trace_csv_header();
  const fs::path eval_dir = out / "eval";
  for (auto& cond : conditions) {
    std::vector<EpisodeTrace> traces(total);
    std::vector<std::vector<int>> labels(total), predicted(total);
    parallel_for(total, cfg.threads, [&](std::size_t i) {
      EpisodeOptions opts;
      opts.keep_frames = false;
      if (cond.detector) {
        GreedyController ctrl(table);
        DetectorObserver obs(*cond.detector);
        traces[i] = run_episode(sc, ctrl, episode_seeds[i], &obs, opts);
      } else {
        StaticController ctrl;
        opts.start = InterfaceConfig::uniform(cfg.static_level);
        traces[i] = run_episode(sc, ctrl, episode_seeds[i], nullptr, opts);
      }
      // closed-loop detector readings: observed level of step t+1 reads step t
      for (std::size_t t = 0; t + 1 < traces[i].steps.size(); ++t) {
        labels[i].push_back(traces[i].steps[t].true_level);
        predicted[i].push_back(traces[i].steps[t + 1].observed_level);
      }
    });

    std::optional<double> accuracy;
    if (cond.detector) {
      DetectorEvaluation ev;
      if (!holdout.empty()) {
        ev = evaluate_detector(*cond.detector, holdout);
      } else {
        std::vector<int> l, p;
        for (std::size_t i = 0; i < total; ++i) {
          l.insert(l.end(), labels[i].begin(), labels[i].end());
          p.insert(p.end(), predicted[i].begin(), predicted[i].end());
        }
        ev = evaluate_predictions(l, p);
      }
      accuracy = ev.accuracy;
      write_file((eval_dir / ("confusion_" + cond.name + ".csv")).string(), confusion_csv(ev.confusion));
    }
    summary.rows.push_back(aggregate(cond.name, accuracy, traces));
    for (std::size_t i = 0; i < total; ++i) traces_csv += trace_csv_rows(traces[i], cond.name, i);
    log << "evaluate: " << cond.name << " done (" << total << " episodes)\n";
  }

  write_file((eval_dir / "metrics.csv").string(), metrics_csv(summary.rows));
  write_file((eval_dir / "deltas.csv").string(), deltas_csv(summary.rows, "static"));
  write_file((eval_dir / "traces.csv").string(), traces_csv);
  std::ostringstream report;
  report << metrics_table(summary.rows) << '\n';
  const auto& adaptive = summary.rows[0];
  const auto& stat = summary.rows[1];
  report << std::fixed << std::setprecision(1) << "adaptive vs static: NASA-TLX "
         << 100.0 * (adaptive.tlx - stat.tlx) / stat.tlx << "%, satisfaction "
         << 100.0 * (adaptive.satisfaction - stat.satisfaction) / stat.satisfaction << "%, adaptability "
         << std::setprecision(2) << std::showpos << adaptive.adaptability - stat.adaptability << std::noshowpos << '\n'
         << "adaptability is the median over steps of 1 - mismatch to the fatigue-appropriate interface\n"
         << "episodes: " << total << " per condition (" << cfg.seeds.size() << " seeds x " << per_seed
         << "), paired across conditions\n";
  write_file((eval_dir / "report.txt").string(), report.str());
  log << report.str();
  return summary;
}

int cmd_gradcheck(std::uint64_t seed, const GradcheckOptions& options, std::ostream& out) {
  const auto checks = gradcheck_model(seed, options);
  bool ok = true;
  out << std::scientific << std::setprecision(3);
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.component << '.' << c.tensor << " (" << c.size
        << " values) max_rel_error=" << c.max_rel_error << '\n';
    ok = ok && c.passed;
  }
  out << (ok ? "gradcheck passed" : "gradcheck FAILED") << " (seed " << seed << ", tolerance "
      << options.tolerance << ")\n";
  out << std::defaultfloat;
  return ok ? kExitOk : kExitCheckFailed;
}

void cmd_replay(const std::string& session_path, const std::string& model_path, std::ostream& out) {
  const Detector model = detector_from_json(read_file(model_path));
  const auto frames = read_session_file(session_path);
  const std::size_t w = model.options().window;
  const auto windows = window_stream(frames, w, w);
  std::ostringstream os;
  os.precision(17);
  os << "window,start_t,end_t,level,p_low,p_medium,p_high,label\n";
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto est = model.estimate(windows[i]);
    os << i << ',' << windows[i].frames.front().t << ',' << windows[i].frames.back().t << ',' << est.level << ','
       << est.probs[0] << ',' << est.probs[1] << ',' << est.probs[2] << ',';
    if (windows[i].label) os << *windows[i].label;
    os << '\n';
  }
  out << os.str();
}

}  // namespace fatigue
