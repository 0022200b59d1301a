#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fatigue/ingestion.hpp"
#include "fatigue/rng.hpp"
#include "fatigue/tensor.hpp"

namespace fatigue {

using Embedding = std::vector<double>;

inline constexpr std::size_t kEmbeddingDim = 8;
inline constexpr double kInitScale = 0.1;

// Standardized per-window inputs for the four modality encoders.
struct ContextInput {
  double task = 0.0;        // task_minutes / 120, clamped to [0, 1]
  double device_watch = 1.0;
  double device_ar = 0.0;
  double lux = 0.0;         // log10(1 + lux) / 5, clamped to [0, 1]
  std::optional<double> sentiment;  // +1 / 0 / -1 when feedback text exists
};

ContextInput make_context(double task_minutes, Device device, double ambient_lux,
                          std::optional<double> sentiment = std::nullopt);

struct WindowFeatures {
  std::vector<double> hr;  // W
  Matrix eye;              // W x 3: gaze speed, blink, pupil
  Matrix gsr;              // W x 1
  ContextInput ctx;        // taken from the last frame
};

// Fixed affine standardization of raw sensor units; blink maps to 0/1.
WindowFeatures extract_features(const Window& w);

// 1-D convolution (4 channels, kernel 5, zero "same" padding) -> ReLU ->
// mean pool over time -> affine map to the embedding.
class HrEncoder {
 public:
  static constexpr std::size_t kChannels = 4;
  static constexpr std::size_t kKernel = 5;

  struct Cache {
    std::vector<double> input;
    Matrix pre;  // channels x W, before ReLU
    std::vector<double> pooled;
  };

  explicit HrEncoder(std::size_t window = kDefaultWindow, std::size_t dim = kEmbeddingDim);

  Embedding encode(std::span<const double> series, Cache* cache = nullptr) const;
  // Accumulates dL/dparams into grads given dL/d(embedding).
  void backward(const Cache& cache, std::span<const double> d_out, ParamSet& grads) const;

  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t window() const noexcept { return window_; }

 private:
  std::size_t window_;
  std::size_t dim_;
  ParamSet params_;  // conv_w [C,K], conv_b [C], out_w [d,C], out_b [d]
};

// Gated recurrent unit scanned over time from a zero state; the final hidden
// state is the embedding. Shared architecture for eye (k = 3) and GSR (k = 1).
class SeqEncoder {
 public:
  struct Step {
    std::vector<double> x, h_prev, z, r, c;
  };
  struct Cache {
    std::vector<Step> steps;
  };

  explicit SeqEncoder(std::size_t input_dim, std::size_t dim = kEmbeddingDim);

  Embedding encode(const Matrix& seq, Cache* cache = nullptr) const;
  void backward(const Cache& cache, std::span<const double> d_out, ParamSet& grads) const;

  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t input_dim_;
  std::size_t dim_;
  // w_z [d,k] u_z [d,d] b_z [d], same for r and h.
  ParamSet params_;
};

// Context tokens (task time, device one-hot, ambient light, optional
// sentiment) each lifted to d by their own affine map, then one head of
// scaled dot-product self-attention, mean pool and an affine readout.
class CtxEncoder {
 public:
  struct AttendCache {
    Matrix tokens, q, k, v, attn;  // attn is n x n, rows sum to 1
    std::vector<double> pooled;
  };
  struct Cache {
    ContextInput input;
    AttendCache attend;
  };

  explicit CtxEncoder(std::size_t dim = kEmbeddingDim);

  // Token matrix, n x d with n = 3 or 4.
  Matrix lift(const ContextInput& in) const;
  // Attention core over already-lifted tokens; permutation-invariant in rows.
  Embedding attend(const Matrix& tokens, AttendCache* cache = nullptr) const;
  Embedding encode(const ContextInput& in, Cache* cache = nullptr) const;
  void backward(const Cache& cache, std::span<const double> d_out, ParamSet& grads) const;

  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
  ParamSet params_;
};

// Linear convolutional autoencoder over a W x k sequence:
// encoder conv k -> m channels, decoder conv m -> k, kernel 5, same padding.
class Denoiser {
 public:
  static constexpr std::size_t kKernel = 5;

  struct Cache {
    Matrix input;
    Matrix hidden;  // W x m
  };

  explicit Denoiser(std::size_t channels, std::size_t hidden = 4);

  // Centre taps pass channel c straight through encoder and decoder.
  static Denoiser identity(std::size_t channels, std::size_t hidden = 4);

  Matrix denoise(const Matrix& seq, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const Matrix& d_out, ParamSet& grads) const;

  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t hidden() const noexcept { return hidden_; }

 private:
  std::size_t channels_;
  std::size_t hidden_;
  ParamSet params_;  // enc_w [m,k,K], enc_b [m], dec_w [k,m,K], dec_b [k]
};

struct DenoisePair {
  Matrix noisy;
  Matrix clean;
};

struct DenoiserTraining {
  double lr = 0.02;
  std::size_t epochs = 40;
  std::size_t batch = 8;
};

double mse(const Matrix& a, const Matrix& b);

// Smooth multi-sinusoid sequences plus Gaussian noise whose std is
// noise_fraction times each channel's clean std over the corpus.
std::vector<DenoisePair> make_denoise_corpus(std::size_t count, std::size_t window,
                                             std::size_t channels, double noise_fraction,
                                             Rng& rng);

// Minibatch SGD on reconstruction MSE starting from the model's current
// parameters. Returns mean training loss per epoch.
std::vector<double> train_denoiser(Denoiser& model, std::span<const DenoisePair> data,
                                   const DenoiserTraining& hyper, Rng& rng);

}  // namespace fatigue
