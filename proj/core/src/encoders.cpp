#include "fatigue/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fatigue/errors.hpp"

namespace fatigue {

namespace {

// Raw-unit standardization: roughly maps the physiological operating range
// of each channel to [-1, 1].
constexpr double kHrCenter = 72.5, kHrScale = 12.5;
constexpr double kGazeCenter = 22.5, kGazeScale = 7.5;
constexpr double kPupilCenter = 3.25, kPupilScale = 0.75;
constexpr double kGsrCenter = 5.0, kGsrScale = 3.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs)
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + " contains a non-finite value");
}

void require_dim(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n)
    throw ValidationError(std::string(what) + " has dimension " + std::to_string(v.size()) +
                          ", expected " + std::to_string(n));
}

// out += W x for W stored [rows, cols].
void matvec_add(const Tensor& w, std::span<const double> x, std::span<double> out) {
  const std::size_t rows = w.shape[0], cols = w.shape[1];
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += w.values[i * cols + j] * x[j];
    out[i] += s;
  }
}

// out += W^T y.
void matvec_t_add(const Tensor& w, std::span<const double> y, std::span<double> out) {
  const std::size_t rows = w.shape[0], cols = w.shape[1];
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j] += w.values[i * cols + j] * y[i];
}

// dW += y x^T.
void outer_add(Tensor& dw, std::span<const double> y, std::span<const double> x) {
  const std::size_t rows = dw.shape[0], cols = dw.shape[1];
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) dw.values[i * cols + j] += y[i] * x[j];
}

void vec_add(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

ContextInput make_context(double task_minutes, Device device, double ambient_lux,
                          std::optional<double> sentiment) {
  ContextInput c;
  c.task = std::clamp(task_minutes / 120.0, 0.0, 1.0);
  c.device_watch = device == Device::watch ? 1.0 : 0.0;
  c.device_ar = device == Device::ar_glasses ? 1.0 : 0.0;
  c.lux = std::clamp(std::log10(1.0 + std::max(ambient_lux, 0.0)) / 5.0, 0.0, 1.0);
  c.sentiment = sentiment;
  return c;
}

WindowFeatures extract_features(const Window& w) {
  if (w.frames.empty()) throw ValidationError("cannot extract features from an empty window");
  const std::size_t n = w.frames.size();
  WindowFeatures f;
  f.hr.resize(n);
  f.eye = Matrix(n, 3);
  f.gsr = Matrix(n, 1);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& fr = w.frames[t];
    f.hr[t] = (fr.hr_bpm - kHrCenter) / kHrScale;
    f.eye(t, 0) = (fr.gaze_speed - kGazeCenter) / kGazeScale;
    f.eye(t, 1) = fr.blink ? 1.0 : 0.0;
    f.eye(t, 2) = (fr.pupil_mm - kPupilCenter) / kPupilScale;
    f.gsr(t, 0) = (fr.gsr_us - kGsrCenter) / kGsrScale;
  }
  const auto& last = w.frames.back();
  f.ctx = make_context(last.task_minutes, last.device, last.ambient_lux);
  return f;
}

// ---------------------------------------------------------------------------
// HrEncoder

HrEncoder::HrEncoder(std::size_t window, std::size_t dim) : window_(window), dim_(dim) {
  if (window == 0 || dim == 0) throw ValidationError("HrEncoder needs window >= 1 and dim >= 1");
  params_.add("conv_w", {kChannels, kKernel});
  params_.add("conv_b", {kChannels});
  params_.add("out_w", {dim, kChannels});
  params_.add("out_b", {dim});
}

Embedding HrEncoder::encode(std::span<const double> series, Cache* cache) const {
  if (series.size() != window_)
    throw ValidationError("heart-rate series has length " + std::to_string(series.size()) +
                          ", expected " + std::to_string(window_));
  require_finite(series, "heart-rate series");
  const auto& w = params_[0];
  const auto& b = params_[1];
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(window_);
  const std::ptrdiff_t half = kKernel / 2;

  Matrix pre(kChannels, window_);
  std::vector<double> pooled(kChannels, 0.0);
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::ptrdiff_t t = 0; t < n; ++t) {
      double s = b.values[c];
      for (std::size_t k = 0; k < kKernel; ++k) {
        const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(k) - half;
        if (src >= 0 && src < n) s += w.at(c, k) * series[static_cast<std::size_t>(src)];
      }
      pre(c, static_cast<std::size_t>(t)) = s;
      pooled[c] += std::max(s, 0.0);
    }
    pooled[c] /= static_cast<double>(window_);
  }

  Embedding out(params_[3].values);
  matvec_add(params_[2], pooled, out);
  if (cache) {
    cache->input.assign(series.begin(), series.end());
    cache->pre = std::move(pre);
    cache->pooled = std::move(pooled);
  }
  return out;
}

void HrEncoder::backward(const Cache& cache, std::span<const double> d_out,
                         ParamSet& grads) const {
  require_dim(d_out, dim_, "embedding gradient");
  outer_add(grads[2], d_out, cache.pooled);
  vec_add(grads[3].values, d_out);

  std::vector<double> d_pooled(kChannels, 0.0);
  matvec_t_add(params_[2], d_out, d_pooled);

  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(window_);
  const std::ptrdiff_t half = kKernel / 2;
  auto& dw = grads[0];
  auto& db = grads[1];
  for (std::size_t c = 0; c < kChannels; ++c) {
    const double d_act = d_pooled[c] / static_cast<double>(window_);
    for (std::ptrdiff_t t = 0; t < n; ++t) {
      if (cache.pre(c, static_cast<std::size_t>(t)) <= 0.0) continue;
      db.values[c] += d_act;
      for (std::size_t k = 0; k < kKernel; ++k) {
        const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(k) - half;
        if (src >= 0 && src < n) dw.at(c, k) += d_act * cache.input[static_cast<std::size_t>(src)];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// SeqEncoder

SeqEncoder::SeqEncoder(std::size_t input_dim, std::size_t dim) : input_dim_(input_dim), dim_(dim) {
  if (input_dim == 0 || dim == 0) throw ValidationError("SeqEncoder needs input_dim, dim >= 1");
  for (const char* gate : {"z", "r", "h"}) {
    params_.add(std::string("w_") + gate, {dim, input_dim});
    params_.add(std::string("u_") + gate, {dim, dim});
    params_.add(std::string("b_") + gate, {dim});
  }
}

Embedding SeqEncoder::encode(const Matrix& seq, Cache* cache) const {
  if (seq.rows == 0) throw ValidationError("sequence is empty");
  if (seq.cols != input_dim_)
    throw ValidationError("sequence has " + std::to_string(seq.cols) + " features, expected " +
                          std::to_string(input_dim_));
  require_finite(seq.data, "sequence");

  const auto &wz = params_[0], &uz = params_[1], &bz = params_[2];
  const auto &wr = params_[3], &ur = params_[4], &br = params_[5];
  const auto &wh = params_[6], &uh = params_[7], &bh = params_[8];

  std::vector<double> h(dim_, 0.0);
  if (cache) cache->steps.clear();
  for (std::size_t t = 0; t < seq.rows; ++t) {
    const auto x = seq.row(t);
    std::vector<double> z(bz.values), r(br.values), c(bh.values);
    matvec_add(wz, x, z);
    matvec_add(uz, h, z);
    matvec_add(wr, x, r);
    matvec_add(ur, h, r);
    for (std::size_t i = 0; i < dim_; ++i) {
      z[i] = sigmoid(z[i]);
      r[i] = sigmoid(r[i]);
    }
    std::vector<double> rh(dim_);
    for (std::size_t i = 0; i < dim_; ++i) rh[i] = r[i] * h[i];
    matvec_add(wh, x, c);
    matvec_add(uh, rh, c);
    std::vector<double> next(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      c[i] = std::tanh(c[i]);
      next[i] = (1.0 - z[i]) * h[i] + z[i] * c[i];
    }
    if (cache)
      cache->steps.push_back(
          Step{std::vector<double>(x.begin(), x.end()), std::move(h), std::move(z), std::move(r),
               std::move(c)});
    h = std::move(next);
  }
  return h;
}

void SeqEncoder::backward(const Cache& cache, std::span<const double> d_out,
                          ParamSet& grads) const {
  require_dim(d_out, dim_, "embedding gradient");
  const auto &uz = params_[1], &ur = params_[4], &uh = params_[7];
  auto &dwz = grads[0], &duz = grads[1], &dbz = grads[2];
  auto &dwr = grads[3], &dur = grads[4], &dbr = grads[5];
  auto &dwh = grads[6], &duh = grads[7], &dbh = grads[8];

  std::vector<double> dh(d_out.begin(), d_out.end());
  std::vector<double> daz(dim_), dar(dim_), dac(dim_), rh(dim_), drh(dim_), dh_prev(dim_);
  for (auto it = cache.steps.rbegin(); it != cache.steps.rend(); ++it) {
    const Step& s = *it;
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
      const double dz = dh[i] * (s.c[i] - s.h_prev[i]);
      const double dc = dh[i] * s.z[i];
      dh_prev[i] = dh[i] * (1.0 - s.z[i]);
      dac[i] = dc * (1.0 - s.c[i] * s.c[i]);
      daz[i] = dz * s.z[i] * (1.0 - s.z[i]);
      rh[i] = s.r[i] * s.h_prev[i];
    }
    // candidate
    outer_add(dwh, dac, s.x);
    outer_add(duh, dac, rh);
    vec_add(dbh.values, dac);
    std::fill(drh.begin(), drh.end(), 0.0);
    matvec_t_add(uh, dac, drh);
    for (std::size_t i = 0; i < dim_; ++i) {
      dh_prev[i] += drh[i] * s.r[i];
      const double dr = drh[i] * s.h_prev[i];
      dar[i] = dr * s.r[i] * (1.0 - s.r[i]);
    }
    // reset gate
    outer_add(dwr, dar, s.x);
    outer_add(dur, dar, s.h_prev);
    vec_add(dbr.values, dar);
    matvec_t_add(ur, dar, dh_prev);
    // update gate
    outer_add(dwz, daz, s.x);
    outer_add(duz, daz, s.h_prev);
    vec_add(dbz.values, daz);
    matvec_t_add(uz, daz, dh_prev);
    dh.swap(dh_prev);
  }
}

// ---------------------------------------------------------------------------
// CtxEncoder

namespace {
constexpr const char* kLiftNames[] = {"task", "device", "lux", "sentiment"};
constexpr std::size_t kLiftInputs[] = {1, 2, 1, 1};
}  // namespace

CtxEncoder::CtxEncoder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ValidationError("CtxEncoder needs dim >= 1");
  for (std::size_t i = 0; i < 4; ++i) {
    params_.add(std::string("lift_") + kLiftNames[i] + "_w", {dim, kLiftInputs[i]});
    params_.add(std::string("lift_") + kLiftNames[i] + "_b", {dim});
  }
  params_.add("w_q", {dim, dim});
  params_.add("w_k", {dim, dim});
  params_.add("w_v", {dim, dim});
  params_.add("out_w", {dim, dim});
  params_.add("out_b", {dim});
}

namespace {

std::vector<std::vector<double>> token_inputs(const ContextInput& in) {
  std::vector<std::vector<double>> u = {{in.task}, {in.device_watch, in.device_ar}, {in.lux}};
  if (in.sentiment) u.push_back({*in.sentiment});
  return u;
}

}  // namespace

Matrix CtxEncoder::lift(const ContextInput& in) const {
  const auto inputs = token_inputs(in);
  for (const auto& u : inputs) require_finite(u, "context input");
  Matrix tokens(inputs.size(), dim_);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto row = tokens.row(t);
    std::copy(params_[2 * t + 1].values.begin(), params_[2 * t + 1].values.end(), row.begin());
    matvec_add(params_[2 * t], inputs[t], row);
  }
  return tokens;
}

Embedding CtxEncoder::attend(const Matrix& tokens, AttendCache* cache) const {
  if (tokens.rows == 0 || tokens.cols != dim_)
    throw ValidationError("attention needs a non-empty token matrix with " + std::to_string(dim_) +
                          " columns");
  require_finite(tokens.data, "context tokens");
  const std::size_t n = tokens.rows;
  const auto &wq = params_[8], &wk = params_[9], &wv = params_[10];
  const auto &ow = params_[11], &ob = params_[12];
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));

  Matrix q(n, dim_), k(n, dim_), v(n, dim_), attn(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    matvec_add(wq, tokens.row(i), q.row(i));
    matvec_add(wk, tokens.row(i), k.row(i));
    matvec_add(wv, tokens.row(i), v.row(i));
  }
  std::vector<double> pooled(dim_, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim_; ++c) s += q(i, c) * k(j, c);
      attn(i, j) = s * scale;
      mx = std::max(mx, attn(i, j));
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (attn(i, j) = std::exp(attn(i, j) - mx));
    for (std::size_t j = 0; j < n; ++j) {
      attn(i, j) /= z;
      for (std::size_t c = 0; c < dim_; ++c) pooled[c] += attn(i, j) * v(j, c);
    }
  }
  for (double& p : pooled) p /= static_cast<double>(n);

  Embedding out(ob.values);
  matvec_add(ow, pooled, out);
  if (cache) {
    cache->tokens = tokens;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attn = std::move(attn);
    cache->pooled = std::move(pooled);
  }
  return out;
}

Embedding CtxEncoder::encode(const ContextInput& in, Cache* cache) const {
  const Matrix tokens = lift(in);
  if (cache) {
    cache->input = in;
    return attend(tokens, &cache->attend);
  }
  return attend(tokens);
}

void CtxEncoder::backward(const Cache& cache, std::span<const double> d_out,
                          ParamSet& grads) const {
  require_dim(d_out, dim_, "embedding gradient");
  const auto& ac = cache.attend;
  const std::size_t n = ac.tokens.rows;
  const auto &wq = params_[8], &wk = params_[9], &wv = params_[10], &ow = params_[11];
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));

  outer_add(grads[11], d_out, ac.pooled);
  vec_add(grads[12].values, d_out);
  std::vector<double> d_pooled(dim_, 0.0);
  matvec_t_add(ow, d_out, d_pooled);
  // every row of the attention output receives d_pooled / n
  std::vector<double> d_row(dim_);
  for (std::size_t c = 0; c < dim_; ++c) d_row[c] = d_pooled[c] / static_cast<double>(n);

  Matrix dq(n, dim_), dk(n, dim_), dv(n, dim_);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> da(n);
    double weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim_; ++c) {
        s += d_row[c] * ac.v(j, c);
        dv(j, c) += ac.attn(i, j) * d_row[c];
      }
      da[j] = s;
      weighted += ac.attn(i, j) * s;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double ds = ac.attn(i, j) * (da[j] - weighted) * scale;
      for (std::size_t c = 0; c < dim_; ++c) {
        dq(i, c) += ds * ac.k(j, c);
        dk(j, c) += ds * ac.q(i, c);
      }
    }
  }

  Matrix d_tokens(n, dim_);
  for (std::size_t i = 0; i < n; ++i) {
    outer_add(grads[8], dq.row(i), ac.tokens.row(i));
    outer_add(grads[9], dk.row(i), ac.tokens.row(i));
    outer_add(grads[10], dv.row(i), ac.tokens.row(i));
    matvec_t_add(wq, dq.row(i), d_tokens.row(i));
    matvec_t_add(wk, dk.row(i), d_tokens.row(i));
    matvec_t_add(wv, dv.row(i), d_tokens.row(i));
  }

  const auto inputs = token_inputs(cache.input);
  for (std::size_t t = 0; t < n; ++t) {
    outer_add(grads[2 * t], d_tokens.row(t), inputs[t]);
    vec_add(grads[2 * t + 1].values, d_tokens.row(t));
  }
}

// ---------------------------------------------------------------------------
// Denoiser

Denoiser::Denoiser(std::size_t channels, std::size_t hidden) : channels_(channels), hidden_(hidden) {
  if (channels == 0 || hidden < channels)
    throw ValidationError("Denoiser needs channels >= 1 and hidden >= channels");
  params_.add("enc_w", {hidden, channels, kKernel});
  params_.add("enc_b", {hidden});
  params_.add("dec_w", {channels, hidden, kKernel});
  params_.add("dec_b", {channels});
}

Denoiser Denoiser::identity(std::size_t channels, std::size_t hidden) {
  Denoiser d(channels, hidden);
  for (std::size_t c = 0; c < channels; ++c) {
    d.params_[0].at(c, c, kKernel / 2) = 1.0;
    d.params_[2].at(c, c, kKernel / 2) = 1.0;
  }
  return d;
}

namespace {

// out(t, o) = b[o] + sum_{i,k} w[o, i, k] * in(t + k - K/2, i)
Matrix conv_same(const Matrix& in, const Tensor& w, const Tensor& b) {
  const std::size_t outs = w.shape[0], ins = w.shape[1], kernel = w.shape[2];
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in.rows);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel / 2);
  Matrix out(in.rows, outs);
  for (std::ptrdiff_t t = 0; t < n; ++t)
    for (std::size_t o = 0; o < outs; ++o) {
      double s = b.values[o];
      for (std::size_t k = 0; k < kernel; ++k) {
        const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(k) - half;
        if (src < 0 || src >= n) continue;
        for (std::size_t i = 0; i < ins; ++i) s += w.at(o, i, k) * in(static_cast<std::size_t>(src), i);
      }
      out(static_cast<std::size_t>(t), o) = s;
    }
  return out;
}

// Accumulates weight/bias gradients and returns dL/d(in).
Matrix conv_same_backward(const Matrix& in, const Tensor& w, const Matrix& d_out, Tensor& dw,
                          Tensor& db) {
  const std::size_t outs = w.shape[0], ins = w.shape[1], kernel = w.shape[2];
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in.rows);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel / 2);
  Matrix d_in(in.rows, ins);
  for (std::ptrdiff_t t = 0; t < n; ++t)
    for (std::size_t o = 0; o < outs; ++o) {
      const double g = d_out(static_cast<std::size_t>(t), o);
      db.values[o] += g;
      for (std::size_t k = 0; k < kernel; ++k) {
        const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(k) - half;
        if (src < 0 || src >= n) continue;
        for (std::size_t i = 0; i < ins; ++i) {
          dw.at(o, i, k) += g * in(static_cast<std::size_t>(src), i);
          d_in(static_cast<std::size_t>(src), i) += g * w.at(o, i, k);
        }
      }
    }
  return d_in;
}

}  // namespace

Matrix Denoiser::denoise(const Matrix& seq, Cache* cache) const {
  if (seq.rows == 0 || seq.cols != channels_)
    throw ValidationError("denoiser input must be W x " + std::to_string(channels_) + ", got " +
                          std::to_string(seq.rows) + " x " + std::to_string(seq.cols));
  require_finite(seq.data, "denoiser input");
  Matrix hidden = conv_same(seq, params_[0], params_[1]);
  Matrix out = conv_same(hidden, params_[2], params_[3]);
  if (cache) {
    cache->input = seq;
    cache->hidden = std::move(hidden);
  }
  return out;
}

void Denoiser::backward(const Cache& cache, const Matrix& d_out, ParamSet& grads) const {
  if (d_out.rows != cache.input.rows || d_out.cols != channels_)
    throw ValidationError("denoiser output gradient has the wrong shape");
  const Matrix d_hidden = conv_same_backward(cache.hidden, params_[2], d_out, grads[2], grads[3]);
  conv_same_backward(cache.input, params_[0], d_hidden, grads[0], grads[1]);
}

double mse(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ValidationError("mse: shape mismatch");
  if (a.data.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

std::vector<DenoisePair> make_denoise_corpus(std::size_t count, std::size_t window,
                                             std::size_t channels, double noise_fraction,
                                             Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586;
  std::vector<DenoisePair> out(count);
  for (auto& p : out) {
    p.clean = Matrix(window, channels);
    for (std::size_t c = 0; c < channels; ++c) {
      const double offset = rng.uniform(-1.0, 1.0);
      const double a1 = rng.uniform(0.5, 1.5), p1 = rng.uniform(24.0, 80.0), ph1 = rng.uniform(0.0, kTwoPi);
      const double a2 = rng.uniform(0.2, 0.6), p2 = rng.uniform(24.0, 80.0), ph2 = rng.uniform(0.0, kTwoPi);
      for (std::size_t t = 0; t < window; ++t) {
        const double x = static_cast<double>(t);
        p.clean(t, c) = offset + a1 * std::sin(kTwoPi * x / p1 + ph1) + a2 * std::sin(kTwoPi * x / p2 + ph2);
      }
    }
  }
  // per-channel clean std over the whole corpus
  std::vector<double> sd(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0, sq = 0.0, n = 0.0;
    for (const auto& p : out)
      for (std::size_t t = 0; t < window; ++t) {
        sum += p.clean(t, c);
        sq += p.clean(t, c) * p.clean(t, c);
        n += 1.0;
      }
    if (n > 0) sd[c] = std::sqrt(std::max(sq / n - (sum / n) * (sum / n), 0.0));
  }
  for (auto& p : out) {
    p.noisy = p.clean;
    for (std::size_t t = 0; t < window; ++t)
      for (std::size_t c = 0; c < channels; ++c) p.noisy(t, c) += noise_fraction * sd[c] * rng.normal();
  }
  return out;
}

std::vector<double> train_denoiser(Denoiser& model, std::span<const DenoisePair> data,
                                   const DenoiserTraining& hyper, Rng& rng) {
  if (data.empty()) throw ValidationError("denoiser training set is empty");
  if (hyper.batch == 0) throw ValidationError("batch size must be >= 1");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> log;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
      const std::size_t end = std::min(order.size(), start + hyper.batch);
      ParamSet grads = model.params().zeros_like();
      for (std::size_t i = start; i < end; ++i) {
        const auto& pair = data[order[i]];
        Denoiser::Cache cache;
        const Matrix y = model.denoise(pair.noisy, &cache);
        total += mse(y, pair.clean);
        Matrix dy(y.rows, y.cols);
        const double norm = 2.0 / static_cast<double>(y.data.size());
        for (std::size_t j = 0; j < y.data.size(); ++j) dy.data[j] = norm * (y.data[j] - pair.clean.data[j]);
        model.backward(cache, dy, grads);
      }
      model.params().axpy(-hyper.lr / static_cast<double>(end - start), grads);
      if (!model.params().all_finite()) throw NumericError("denoiser parameters became non-finite");
    }
    log.push_back(total / static_cast<double>(data.size()));
  }
  return log;
}

}  // namespace fatigue
