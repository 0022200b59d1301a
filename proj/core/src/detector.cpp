#include "fatigue/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fatigue/errors.hpp"
#include "json_util.hpp"

namespace fatigue {

namespace {

constexpr std::array<std::string_view, 4> kModalityNames{"hr", "eye", "gsr", "ctx"};

double logsumexp(const LevelProbs& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

void check_label(int label) {
  if (label < 0 || label >= static_cast<int>(kLevels))
    throw ValidationError("fatigue level out of range {0,1,2}: " + std::to_string(label));
}

}  // namespace

std::string_view modality_name(Modality m) noexcept {
  return kModalityNames[static_cast<std::size_t>(m)];
}

Modality parse_modality(std::string_view name) {
  for (auto m : kModalities)
    if (modality_name(m) == name) return m;
  throw ValidationError("unknown modality '" + std::string(name) + "'");
}

ModalityMask only(Modality m) noexcept {
  ModalityMask mask{false, false, false, false};
  mask[static_cast<std::size_t>(m)] = true;
  return mask;
}

std::array<double, 4> FusionWeights::normalized() const noexcept {
  auto w = as_array();
  double total = 0.0;
  for (double x : w) total += std::abs(x);
  if (total == 0.0) return {0.0, 0.0, 0.0, 0.0};
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> fuse(std::span<const double> h, std::span<const double> e,
                         std::span<const double> g, std::span<const double> c,
                         const FusionWeights& w) {
  if (e.size() != h.size() || g.size() != h.size() || c.size() != h.size())
    throw ValidationError("fuse: embeddings must share one dimension");
  std::vector<double> x(h.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = w.alpha * h[i] + w.beta * e[i] + w.gamma * g[i] + w.delta * c[i];
  return x;
}

LevelProbs softmax(const LevelProbs& logits) {
  const double lse = logsumexp(logits);
  LevelProbs p{};
  for (std::size_t i = 0; i < kLevels; ++i) p[i] = std::exp(logits[i] - lse);
  return p;
}

int argmax_level(const LevelProbs& p) noexcept {
  int best = 0;
  for (int i = 1; i < static_cast<int>(kLevels); ++i)
    if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(best)]) best = i;
  return best;
}

namespace {

LevelProbs head_logits(std::span<const double> x, const Tensor& w, const Tensor& b) {
  LevelProbs logits{};
  const std::size_t d = w.shape[1];
  for (std::size_t k = 0; k < kLevels; ++k) {
    double s = b.values[k];
    for (std::size_t i = 0; i < d; ++i) s += w.values[k * d + i] * x[i];
    logits[k] = s;
  }
  for (double l : logits)
    if (!std::isfinite(l)) throw NumericError("classification head produced a non-finite logit");
  return logits;
}

}  // namespace

FatigueEstimate classify(std::span<const double> x, const ClassifierHead& head) {
  if (head.weights.rows != kLevels || head.weights.cols != x.size())
    throw ValidationError("classify: head is not 3 x " + std::to_string(x.size()));
  LevelProbs logits{};
  for (std::size_t k = 0; k < kLevels; ++k) {
    double s = head.bias[k];
    for (std::size_t i = 0; i < x.size(); ++i) s += head.weights(k, i) * x[i];
    logits[k] = s;
  }
  for (double l : logits)
    if (!std::isfinite(l)) throw NumericError("classify: non-finite logit");
  FatigueEstimate out;
  out.x_fatigue.assign(x.begin(), x.end());
  out.probs = softmax(logits);
  out.level = argmax_level(out.probs);
  return out;
}

// ---------------------------------------------------------------------------
// FusionClassifier

FusionClassifier::FusionClassifier(std::size_t dim, ModalityMask mask) : dim_(dim), mask_(mask) {
  if (dim == 0) throw ValidationError("FusionClassifier needs dim >= 1");
  params_.add("fusion", {4});
  params_.add("head_w", {kLevels, dim});
  params_.add("head_b", {kLevels});
}

FatigueEstimate FusionClassifier::forward(const EmbeddingQuad& emb, Cache* cache) const {
  const auto& w = params_[0].values;
  std::vector<double> x(dim_, 0.0);
  for (std::size_t m = 0; m < 4; ++m) {
    if (!mask_[m]) continue;
    if (emb[m].size() != dim_)
      throw ValidationError("fusion: embedding " + std::string(kModalityNames[m]) + " has dimension " +
                            std::to_string(emb[m].size()) + ", expected " + std::to_string(dim_));
    for (std::size_t i = 0; i < dim_; ++i) x[i] += w[m] * emb[m][i];
  }
  const LevelProbs logits = head_logits(x, params_[1], params_[2]);
  FatigueEstimate out;
  out.probs = softmax(logits);
  out.level = argmax_level(out.probs);
  if (cache) {
    cache->inputs = emb;
    cache->x = x;
    cache->logits = logits;
  }
  out.x_fatigue = std::move(x);
  return out;
}

EmbeddingQuad FusionClassifier::backward(const Cache& cache, const LevelProbs& d_logits,
                                         ParamSet& grads) const {
  const auto& hw = params_[1].values;
  auto& d_fusion = grads[0].values;
  auto& d_hw = grads[1].values;
  auto& d_hb = grads[2].values;
  std::vector<double> dx(dim_, 0.0);
  for (std::size_t k = 0; k < kLevels; ++k) {
    d_hb[k] += d_logits[k];
    for (std::size_t i = 0; i < dim_; ++i) {
      d_hw[k * dim_ + i] += d_logits[k] * cache.x[i];
      dx[i] += hw[k * dim_ + i] * d_logits[k];
    }
  }
  EmbeddingQuad d_emb;
  const auto& w = params_[0].values;
  for (std::size_t m = 0; m < 4; ++m) {
    d_emb[m].assign(dim_, 0.0);
    if (!mask_[m]) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      s += dx[i] * cache.inputs[m][i];
      d_emb[m][i] = w[m] * dx[i];
    }
    d_fusion[m] += s;
  }
  return d_emb;
}

FusionWeights FusionClassifier::weights() const noexcept {
  const auto& w = params_[0].values;
  return {w[0], w[1], w[2], w[3]};
}

void FusionClassifier::set_weights(const FusionWeights& fw) {
  const auto a = fw.as_array();
  for (std::size_t m = 0; m < 4; ++m) params_[0].values[m] = mask_[m] ? a[m] : 0.0;
}

ClassifierHead FusionClassifier::head() const {
  ClassifierHead h;
  h.weights = Matrix(kLevels, dim_);
  h.weights.data = params_[1].values;
  std::copy(params_[2].values.begin(), params_[2].values.end(), h.bias.begin());
  return h;
}

// ---------------------------------------------------------------------------
// Detector

Detector::Detector(const DetectorOptions& options, Rng& init)
    : options_(options),
      hr_(options.window, options.dim),
      eye_(3, options.dim),
      gsr_(1, options.dim),
      ctx_(options.dim),
      fusion_(options.dim, options.modalities) {
  if (std::none_of(options.modalities.begin(), options.modalities.end(), [](bool b) { return b; }))
    throw ValidationError("detector needs at least one modality");
  for (auto* p : param_sets()) p->fill_uniform(init, -kInitScale, kInitScale);
  fusion_.set_weights({0.25, 0.25, 0.25, 0.25});
}

std::vector<ParamSet*> Detector::param_sets() {
  return {&hr_.params(), &eye_.params(), &gsr_.params(), &ctx_.params(), &fusion_.params()};
}

std::vector<const ParamSet*> Detector::param_sets() const {
  return {&hr_.params(), &eye_.params(), &gsr_.params(), &ctx_.params(), &fusion_.params()};
}

Gradients Detector::zero_gradients() const {
  Gradients g;
  for (const auto* p : param_sets()) g.push_back(p->zeros_like());
  return g;
}

void Detector::apply(const Gradients& grads, double scale) {
  auto sets = param_sets();
  for (std::size_t i = 0; i < sets.size(); ++i) sets[i]->axpy(scale, grads[i]);
}

void Detector::set_denoisers(Denoiser eye, Denoiser gsr) {
  if (eye.channels() != 3 || gsr.channels() != 1)
    throw ValidationError("denoisers must have 3 (eye) and 1 (gsr) channels");
  eye_denoiser_ = std::move(eye);
  gsr_denoiser_ = std::move(gsr);
}

void Detector::clear_denoisers() noexcept {
  eye_denoiser_.reset();
  gsr_denoiser_.reset();
}

EmbeddingQuad Detector::embed(const WindowFeatures& f, Caches* caches) const {
  const auto& mask = options_.modalities;
  EmbeddingQuad emb;
  for (auto& e : emb) e.assign(options_.dim, 0.0);
  if (mask[0]) emb[0] = hr_.encode(f.hr, caches ? &caches->hr : nullptr);
  if (mask[1])
    emb[1] = eye_.encode(eye_denoiser_ ? eye_denoiser_->denoise(f.eye) : f.eye,
                         caches ? &caches->eye : nullptr);
  if (mask[2])
    emb[2] = gsr_.encode(gsr_denoiser_ ? gsr_denoiser_->denoise(f.gsr) : f.gsr,
                         caches ? &caches->gsr : nullptr);
  if (mask[3]) emb[3] = ctx_.encode(f.ctx, caches ? &caches->ctx : nullptr);
  return emb;
}

FatigueEstimate Detector::estimate(const WindowFeatures& f) const {
  return fusion_.forward(embed(f));
}

FatigueEstimate Detector::estimate(const Window& w) const {
  return estimate(extract_features(w));
}

double Detector::loss_and_grad(const WindowFeatures& f, int label, Gradients* grads,
                               FatigueEstimate* estimate) const {
  check_label(label);
  Caches caches;
  const EmbeddingQuad emb = embed(f, grads ? &caches : nullptr);
  FusionClassifier::Cache fc;
  FatigueEstimate est = fusion_.forward(emb, &fc);
  const LevelProbs& logits = fc.logits;
  const double loss = logsumexp(logits) - logits[static_cast<std::size_t>(label)];
  if (!std::isfinite(loss)) throw NumericError("detector loss is not finite");

  if (grads) {
    LevelProbs d_logits = est.probs;
    d_logits[static_cast<std::size_t>(label)] -= 1.0;
    const EmbeddingQuad d_emb = fusion_.backward(fc, d_logits, (*grads)[4]);
    const auto& mask = options_.modalities;
    if (mask[0]) hr_.backward(caches.hr, d_emb[0], (*grads)[0]);
    if (mask[1]) eye_.backward(caches.eye, d_emb[1], (*grads)[1]);
    if (mask[2]) gsr_.backward(caches.gsr, d_emb[2], (*grads)[2]);
    if (mask[3]) ctx_.backward(caches.ctx, d_emb[3], (*grads)[3]);
  }
  if (estimate) *estimate = std::move(est);
  return loss;
}

// ---------------------------------------------------------------------------
// Training

namespace {

// Shared minibatch SGD loop. step(i, grads) accumulates the gradient of
// sample i's loss and returns (loss, predicted level).
template <class Model, class Step>
TrainingLog run_sgd(Model& model, std::span<const int> labels, const DetectorHyper& hyper,
                    Rng& rng, Step&& step) {
  if (labels.empty()) throw ValidationError("training set is empty");
  if (hyper.batch == 0) throw ValidationError("batch size must be >= 1");
  if (!(hyper.lr > 0.0) || !std::isfinite(hyper.lr))
    throw ValidationError("learning rate must be positive and finite");

  TrainingLog log;
  std::array<std::size_t, kLevels> counts{};
  for (int l : labels) {
    check_label(l);
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t l = 0; l < kLevels; ++l)
    if (counts[l] == 0)
      log.warnings.push_back("class " + std::to_string(l) + " absent from training data");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
      const std::size_t end = std::min(order.size(), start + hyper.batch);
      Gradients grads = model.zero_gradients();
      for (std::size_t i = start; i < end; ++i) {
        const auto [loss, predicted] = step(order[i], grads);
        total += loss;
        if (predicted == labels[order[i]]) ++correct;
      }
      model.apply(grads, -hyper.lr / static_cast<double>(end - start));
    }
    const double n = static_cast<double>(labels.size());
    if (!std::isfinite(total)) throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch));
    log.epochs.push_back({epoch, total / n, static_cast<double>(correct) / n});
  }
  return log;
}

// Adapter giving FusionClassifier the zero_gradients/apply interface.
struct FusionModel {
  FusionClassifier& fc;
  Gradients zero_gradients() const { return {fc.params().zeros_like()}; }
  void apply(const Gradients& g, double scale) { fc.params().axpy(scale, g[0]); }
};

}  // namespace

std::string training_log_csv(const TrainingLog& log) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,loss,accuracy\n";
  for (const auto& e : log.epochs) os << e.epoch << ',' << e.loss << ',' << e.accuracy << '\n';
  return os.str();
}

std::vector<LabeledWindow> label_windows(std::span<const Window> windows) {
  std::vector<LabeledWindow> out;
  out.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!windows[i].label) throw ValidationError("window " + std::to_string(i) + " has no label");
    out.push_back({extract_features(windows[i]), *windows[i].label});
  }
  return out;
}

TrainingLog train_detector(Detector& model, std::span<const LabeledWindow> data,
                           const DetectorHyper& hyper, Rng& rng) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& d : data) labels.push_back(d.label);
  return run_sgd(model, labels, hyper, rng, [&](std::size_t i, Gradients& g) {
    FatigueEstimate est;
    const double loss = model.loss_and_grad(data[i].features, data[i].label, &g, &est);
    return std::pair<double, int>{loss, est.level};
  });
}

TrainedDetector train_detector(std::span<const LabeledWindow> data, const DetectorOptions& options,
                               const DetectorHyper& hyper, std::uint64_t seed) {
  const Rng root(seed);
  Rng init = root.split(1);
  Rng shuffle = root.split(2);
  TrainedDetector out{Detector(options, init), {}};
  out.log = train_detector(out.model, data, hyper, shuffle);
  return out;
}

TrainingLog train_fusion_classifier(FusionClassifier& model,
                                    std::span<const LabeledEmbeddings> data,
                                    const DetectorHyper& hyper, Rng& rng) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& d : data) labels.push_back(d.label);
  FusionModel adapter{model};
  return run_sgd(adapter, labels, hyper, rng, [&](std::size_t i, Gradients& g) {
    FusionClassifier::Cache cache;
    const FatigueEstimate est = model.forward(data[i].embeddings, &cache);
    const LevelProbs& logits = cache.logits;
    const double loss = logsumexp(logits) - logits[static_cast<std::size_t>(data[i].label)];
    LevelProbs d_logits = est.probs;
    d_logits[static_cast<std::size_t>(data[i].label)] -= 1.0;
    model.backward(cache, d_logits, g[0]);
    return std::pair<double, int>{loss, est.level};
  });
}

TrainedDetector fuse_detectors(std::span<const Detector* const> unimodal,
                               std::span<const LabeledWindow> data, const DetectorHyper& hyper,
                               Rng& rng) {
  if (unimodal.empty()) throw ValidationError("fuse_detectors needs at least one detector");
  DetectorOptions options = unimodal.front()->options();
  options.modalities = {false, false, false, false};
  std::array<const Detector*, 4> source{};
  for (const Detector* d : unimodal) {
    if (d->options().window != options.window || d->options().dim != options.dim)
      throw ValidationError("fuse_detectors: detectors differ in window or embedding size");
    const auto& mask = d->options().modalities;
    if (std::count(mask.begin(), mask.end(), true) != 1)
      throw ValidationError("fuse_detectors expects single-modality detectors");
    const auto m = static_cast<std::size_t>(std::find(mask.begin(), mask.end(), true) - mask.begin());
    if (source[m]) throw ValidationError("fuse_detectors: modality given twice");
    source[m] = d;
    options.modalities[m] = true;
  }

  Rng init = rng.split(1);
  Rng shuffle = rng.split(2);
  TrainedDetector out{Detector(options, init), {}};
  auto sets = out.model.param_sets();
  for (std::size_t m = 0; m < 4; ++m)
    if (source[m]) *sets[m] = *source[m]->param_sets()[m];
  for (const Detector* d : unimodal)
    if (d->denoising()) {
      out.model.set_denoisers(*d->eye_denoiser(), *d->gsr_denoiser());
      break;
    }

  std::vector<LabeledEmbeddings> embedded;
  embedded.reserve(data.size());
  for (const auto& w : data) embedded.push_back({out.model.embed(w.features), w.label});
  out.log = train_fusion_classifier(out.model.fusion(), embedded, hyper, shuffle);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

DetectorEvaluation evaluate_predictions(std::span<const int> labels, std::span<const int> predicted) {
  if (labels.empty()) throw ValidationError("evaluation set is empty");
  if (labels.size() != predicted.size())
    throw ValidationError("label and prediction counts differ");
  DetectorEvaluation ev;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check_label(labels[i]);
    check_label(predicted[i]);
    ++ev.confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predicted[i])];
  }
  ev.total = labels.size();
  std::size_t trace = 0;
  for (std::size_t l = 0; l < kLevels; ++l) trace += ev.confusion[l][l];
  ev.accuracy = static_cast<double>(trace) / static_cast<double>(ev.total);
  return ev;
}

DetectorEvaluation evaluate_detector(const Detector& model, std::span<const LabeledWindow> data) {
  if (data.empty()) throw ValidationError("evaluation set is empty");
  std::vector<int> labels, predicted;
  for (const auto& d : data) {
    labels.push_back(d.label);
    predicted.push_back(model.estimate(d.features).level);
  }
  return evaluate_predictions(labels, predicted);
}

std::string confusion_csv(const Confusion& c) {
  std::ostringstream os;
  os << "true,pred_low,pred_medium,pred_high\n";
  constexpr const char* names[] = {"low", "medium", "high"};
  for (std::size_t l = 0; l < kLevels; ++l)
    os << names[l] << ',' << c[l][0] << ',' << c[l][1] << ',' << c[l][2] << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

detail::json denoiser_json(const Denoiser& d) {
  return {{"channels", d.channels()}, {"hidden", d.hidden()}, {"tensors", detail::to_json(d.params())}};
}

Denoiser denoiser_from(const detail::json& j, std::size_t channels, const std::string& what) {
  const auto ch = j.at("channels").get<std::size_t>();
  if (ch != channels) throw ValidationError(what + ": expected " + std::to_string(channels) + " channels");
  Denoiser d(ch, j.at("hidden").get<std::size_t>());
  detail::from_json(j.at("tensors"), d.params(), what);
  return d;
}

}  // namespace

std::string detector_to_json(const Detector& model) {
  detail::json j;
  j["format"] = "fatigue-detector";
  j["version"] = 1;
  j["window"] = model.options().window;
  j["dim"] = model.options().dim;
  detail::json mods = detail::json::array();
  for (auto m : kModalities)
    if (model.options().modalities[static_cast<std::size_t>(m)]) mods.push_back(modality_name(m));
  j["modalities"] = mods;
  const auto fw = model.fusion().weights();
  j["fusion_weights"] = {{"alpha", fw.alpha}, {"beta", fw.beta}, {"gamma", fw.gamma}, {"delta", fw.delta}};
  detail::json comps;
  const auto sets = model.param_sets();
  for (std::size_t i = 0; i < sets.size(); ++i) comps[Detector::kComponentNames[i]] = detail::to_json(*sets[i]);
  j["components"] = comps;
  if (model.denoising())
    j["denoisers"] = {{"eye", denoiser_json(*model.eye_denoiser())},
                      {"gsr", denoiser_json(*model.gsr_denoiser())}};
  return j.dump(1);
}

Detector detector_from_json(std::string_view text) {
  try {
    const auto j = detail::json::parse(text);
    if (j.at("format") != "fatigue-detector") throw ValidationError("not a detector model document");
    DetectorOptions opt;
    opt.window = j.at("window").get<std::size_t>();
    opt.dim = j.at("dim").get<std::size_t>();
    opt.modalities = {false, false, false, false};
    for (const auto& m : j.at("modalities"))
      opt.modalities[static_cast<std::size_t>(parse_modality(m.get<std::string>()))] = true;
    Rng dummy(0);
    Detector model(opt, dummy);
    const auto sets = model.param_sets();
    const auto& comps = j.at("components");
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const std::string name = Detector::kComponentNames[i];
      detail::from_json(comps.at(name), *sets[i], "component " + name);
      if (!sets[i]->all_finite()) throw ValidationError("component " + name + " has non-finite values");
    }
    if (j.contains("denoisers")) {
      const auto& dn = j.at("denoisers");
      model.set_denoisers(denoiser_from(dn.at("eye"), 3, "eye denoiser"),
                          denoiser_from(dn.at("gsr"), 1, "gsr denoiser"));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed detector document: ") + e.what());
  }
}

}  // namespace fatigue
