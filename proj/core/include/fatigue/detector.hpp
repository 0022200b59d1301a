#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fatigue/encoders.hpp"
#include "fatigue/ingestion.hpp"
#include "fatigue/rng.hpp"
#include "fatigue/tensor.hpp"

namespace fatigue {

inline constexpr std::size_t kLevels = 3;

enum class Modality : std::size_t { hr = 0, eye = 1, gsr = 2, ctx = 3 };
inline constexpr std::array<Modality, 4> kModalities{Modality::hr, Modality::eye, Modality::gsr,
                                                     Modality::ctx};

std::string_view modality_name(Modality m) noexcept;
Modality parse_modality(std::string_view name);

// Which of H, E, G, C take part in the fusion.
using ModalityMask = std::array<bool, 4>;
inline constexpr ModalityMask kAllModalities{true, true, true, true};
ModalityMask only(Modality m) noexcept;

// The four fusion scalars of X = alpha H + beta E + gamma G + delta C.
struct FusionWeights {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;

  std::array<double, 4> as_array() const noexcept { return {alpha, beta, gamma, delta}; }
  // Each weight divided by the sum of absolute values; all zero if that sum is 0.
  std::array<double, 4> normalized() const noexcept;
};

using EmbeddingQuad = std::array<Embedding, 4>;

// Throws ValidationError unless all four embeddings share one dimension.
std::vector<double> fuse(std::span<const double> h, std::span<const double> e,
                         std::span<const double> g, std::span<const double> c,
                         const FusionWeights& w);

using LevelProbs = std::array<double, kLevels>;

struct FatigueEstimate {
  std::vector<double> x_fatigue;
  LevelProbs probs{};
  int level = 0;
};

// Affine map d -> 3.
struct ClassifierHead {
  Matrix weights;  // 3 x d
  std::array<double, kLevels> bias{};
};

LevelProbs softmax(const LevelProbs& logits);
// Index of the largest entry, lowest index on ties.
int argmax_level(const LevelProbs& p) noexcept;
// Throws NumericError on non-finite logits.
FatigueEstimate classify(std::span<const double> x, const ClassifierHead& head);

using Gradients = std::vector<ParamSet>;

// Fusion weights plus classification head, trained over given embeddings.
class FusionClassifier {
 public:
  struct Cache {
    EmbeddingQuad inputs;
    std::vector<double> x;
    LevelProbs logits{};
  };

  explicit FusionClassifier(std::size_t dim = kEmbeddingDim, ModalityMask mask = kAllModalities);

  FatigueEstimate forward(const EmbeddingQuad& emb, Cache* cache = nullptr) const;
  // Accumulates parameter gradients; returns dL/d(embedding) per modality.
  EmbeddingQuad backward(const Cache& cache, const LevelProbs& d_logits, ParamSet& grads) const;

  FusionWeights weights() const noexcept;
  void set_weights(const FusionWeights& w);
  ClassifierHead head() const;

  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }
  const ModalityMask& mask() const noexcept { return mask_; }
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
  ModalityMask mask_;
  ParamSet params_;  // fusion [4], head_w [3, d], head_b [3]
};

struct DetectorOptions {
  std::size_t window = kDefaultWindow;
  std::size_t dim = kEmbeddingDim;
  ModalityMask modalities = kAllModalities;
};

// Encoders + fusion + head. Inactive modalities contribute a zero embedding
// and their fusion weight stays 0.
class Detector {
 public:
  struct Caches {
    HrEncoder::Cache hr;
    SeqEncoder::Cache eye;
    SeqEncoder::Cache gsr;
    CtxEncoder::Cache ctx;
    FusionClassifier::Cache fusion;
  };

  // Encoder and head weights uniform in [-0.1, 0.1]; active fusion weights
  // start at 0.25.
  Detector(const DetectorOptions& options, Rng& init);

  EmbeddingQuad embed(const WindowFeatures& f, Caches* caches = nullptr) const;
  FatigueEstimate estimate(const WindowFeatures& f) const;
  FatigueEstimate estimate(const Window& w) const;

  // Cross-entropy against label; accumulates gradients when grads != nullptr.
  // Order of gradient sets matches param_sets().
  double loss_and_grad(const WindowFeatures& f, int label, Gradients* grads,
                       FatigueEstimate* estimate = nullptr) const;

  Gradients zero_gradients() const;
  void apply(const Gradients& grads, double scale);
  // hr, eye, gsr, ctx, fusion
  std::vector<ParamSet*> param_sets();
  std::vector<const ParamSet*> param_sets() const;
  static constexpr std::array<const char*, 5> kComponentNames{"hr", "eye", "gsr", "ctx", "fusion"};

  // Frozen denoisers applied to the eye / GSR channels before encoding.
  void set_denoisers(Denoiser eye, Denoiser gsr);
  void clear_denoisers() noexcept;
  bool denoising() const noexcept { return eye_denoiser_.has_value(); }
  const std::optional<Denoiser>& eye_denoiser() const noexcept { return eye_denoiser_; }
  const std::optional<Denoiser>& gsr_denoiser() const noexcept { return gsr_denoiser_; }

  const DetectorOptions& options() const noexcept { return options_; }
  const HrEncoder& hr() const noexcept { return hr_; }
  const SeqEncoder& eye() const noexcept { return eye_; }
  const SeqEncoder& gsr() const noexcept { return gsr_; }
  const CtxEncoder& ctx() const noexcept { return ctx_; }
  const FusionClassifier& fusion() const noexcept { return fusion_; }
  FusionClassifier& fusion() noexcept { return fusion_; }

 private:
  DetectorOptions options_;
  HrEncoder hr_;
  SeqEncoder eye_;
  SeqEncoder gsr_;
  CtxEncoder ctx_;
  FusionClassifier fusion_;
  std::optional<Denoiser> eye_denoiser_;
  std::optional<Denoiser> gsr_denoiser_;
};

struct DetectorHyper {
  double lr = 0.05;
  std::size_t epochs = 30;
  std::size_t batch = 16;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;      // mean cross-entropy over the epoch's minibatches
  double accuracy = 0.0;  // fraction correct, evaluated before each update
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  std::vector<std::string> warnings;
};

std::string training_log_csv(const TrainingLog& log);

struct LabeledWindow {
  WindowFeatures features;
  int label = 0;
};

// Throws ValidationError if any window lacks a label.
std::vector<LabeledWindow> label_windows(std::span<const Window> windows);

// Minibatch SGD on mean cross-entropy, shuffled per epoch from rng.
TrainingLog train_detector(Detector& model, std::span<const LabeledWindow> data,
                           const DetectorHyper& hyper, Rng& rng);

struct TrainedDetector {
  Detector model;
  TrainingLog log;
};

// Initialization draws from seed stream 1, shuffling from stream 2.
TrainedDetector train_detector(std::span<const LabeledWindow> data, const DetectorOptions& options,
                               const DetectorHyper& hyper, std::uint64_t seed);

// Builds a multimodal detector from trained single-modality detectors. Each
// encoder is copied from the detector that uses it and kept frozen; only the
// fusion weights and the head are trained, on the resulting embeddings.
TrainedDetector fuse_detectors(std::span<const Detector* const> unimodal,
                               std::span<const LabeledWindow> data, const DetectorHyper& hyper,
                               Rng& rng);

struct LabeledEmbeddings {
  EmbeddingQuad embeddings;
  int label = 0;
};

// Frozen-encoder variant: trains only fusion weights and head.
TrainingLog train_fusion_classifier(FusionClassifier& model,
                                    std::span<const LabeledEmbeddings> data,
                                    const DetectorHyper& hyper, Rng& rng);

using Confusion = std::array<std::array<std::size_t, kLevels>, kLevels>;  // [true][predicted]

struct DetectorEvaluation {
  double accuracy = 0.0;
  Confusion confusion{};
  std::size_t total = 0;
};

DetectorEvaluation evaluate_predictions(std::span<const int> labels, std::span<const int> predicted);
DetectorEvaluation evaluate_detector(const Detector& model, std::span<const LabeledWindow> data);
// Header "true,pred_low,pred_medium,pred_high", one row per true level.
std::string confusion_csv(const Confusion& c);

std::string detector_to_json(const Detector& model);
// Validates every tensor shape against the declared options.
Detector detector_from_json(std::string_view text);

}  // namespace fatigue
