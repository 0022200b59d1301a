#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "fatigue/encoders.hpp"
#include "fatigue/errors.hpp"
#include "fatigue/rng.hpp"

using namespace fatigue;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> random_vector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& x : m.data) x = rng.uniform(-1.0, 1.0);
  return m;
}

// Central-difference check of every parameter against an analytic gradient.
void expect_matches_finite_differences(ParamSet& params, const ParamSet& analytic,
                                       const std::function<double()>& loss) {
  const double h = 1e-5;
  for (std::size_t t = 0; t < params.count(); ++t)
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      double& p = params[t].values[i];
      const double saved = p;
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[t].values[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      EXPECT_LE(rel, 1e-4) << params[t].name << "[" << i << "] analytic " << a << " numeric " << numeric;
    }
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

TEST(HrEncoder, ZeroInputZeroParamsGivesZero) {
  HrEncoder enc(30);
  enc.params().fill(0.0);
  EXPECT_TRUE(all_zero(enc.encode(std::vector<double>(30, 0.0))));
}

TEST(HrEncoder, ConstantSeriesWithZeroKernelDependsOnBiasOnly) {
  HrEncoder enc(30);
  Rng rng(4);
  enc.params().fill_uniform(rng, -1.0, 1.0);
  enc.params().get("conv_w").values.assign(HrEncoder::kChannels * HrEncoder::kKernel, 0.0);
  const auto& b = enc.params().get("conv_b").values;
  const auto& w = enc.params().get("out_w");
  const auto& ob = enc.params().get("out_b").values;
  const auto got = enc.encode(std::vector<double>(30, 3.7));
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    double expected = ob[i];
    for (std::size_t c = 0; c < HrEncoder::kChannels; ++c) expected += w.at(i, c) * std::max(b[c], 0.0);
    EXPECT_NEAR(got[i], expected, 1e-14);
  }
}

TEST(HrEncoder, GradientsMatchFiniteDifferences) {
  Rng rng(11);
  HrEncoder enc(12);
  enc.params().fill_uniform(rng, -0.5, 0.5);
  const auto x = random_vector(12, rng);
  const auto u = random_vector(kEmbeddingDim, rng);
  HrEncoder::Cache cache;
  enc.encode(x, &cache);
  ParamSet grads = enc.params().zeros_like();
  enc.backward(cache, u, grads);
  expect_matches_finite_differences(enc.params(), grads, [&] { return dot(u, enc.encode(x)); });
}

TEST(HrEncoder, RejectsBadInput) {
  HrEncoder enc(10);
  EXPECT_THROW(enc.encode(std::vector<double>(9, 0.0)), ValidationError);
  std::vector<double> x(10, 0.0);
  x[3] = std::nan("");
  EXPECT_THROW(enc.encode(x), ValidationError);
}

TEST(SeqEncoder, ZeroInputZeroParamsGivesZero) {
  SeqEncoder enc(3);
  enc.params().fill(0.0);
  EXPECT_TRUE(all_zero(enc.encode(Matrix(20, 3))));
}

TEST(SeqEncoder, SingleStepIsOneCellApplication) {
  Rng rng(8);
  SeqEncoder enc(3);
  enc.params().fill_uniform(rng, -1.0, 1.0);
  const Matrix x = random_matrix(1, 3, rng);
  const auto& p = enc.params();
  const auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const auto got = enc.encode(x);
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    // from a zero hidden state the recurrent terms vanish
    double z = p.get("b_z").values[i], c = p.get("b_h").values[i];
    for (std::size_t j = 0; j < 3; ++j) {
      z += p.get("w_z").at(i, j) * x(0, j);
      c += p.get("w_h").at(i, j) * x(0, j);
    }
    EXPECT_NEAR(got[i], sigmoid(z) * std::tanh(c), 1e-15);
  }
}

TEST(SeqEncoder, GradientsMatchFiniteDifferences) {
  for (std::size_t k : {1u, 3u}) {
    Rng rng(20 + k);
    SeqEncoder enc(k);
    enc.params().fill_uniform(rng, -0.5, 0.5);
    const Matrix x = random_matrix(12, k, rng);
    const auto u = random_vector(kEmbeddingDim, rng);
    SeqEncoder::Cache cache;
    enc.encode(x, &cache);
    ParamSet grads = enc.params().zeros_like();
    enc.backward(cache, u, grads);
    expect_matches_finite_differences(enc.params(), grads, [&] { return dot(u, enc.encode(x)); });
  }
}

TEST(SeqEncoder, RejectsEmptyOrMisshapen) {
  SeqEncoder enc(3);
  EXPECT_THROW(enc.encode(Matrix(0, 3)), ValidationError);
  EXPECT_THROW(enc.encode(Matrix(5, 2)), ValidationError);
}

TEST(CtxEncoder, DuplicatedTokenGivesUniformAttention) {
  Rng rng(5);
  CtxEncoder enc;
  enc.params().fill_uniform(rng, -1.0, 1.0);
  const auto token = random_vector(kEmbeddingDim, rng);
  Matrix tokens(3, kEmbeddingDim);
  for (std::size_t r = 0; r < 3; ++r) std::copy(token.begin(), token.end(), tokens.row(r).begin());
  CtxEncoder::AttendCache cache;
  const auto got = enc.attend(tokens, &cache);
  for (double a : cache.attn.data) EXPECT_NEAR(a, 1.0 / 3.0, 1e-15);
  // value path of the single token: out_w (w_v token) + out_b
  const auto& wv = enc.params().get("w_v");
  const auto& ow = enc.params().get("out_w");
  std::vector<double> v(kEmbeddingDim, 0.0);
  for (std::size_t i = 0; i < kEmbeddingDim; ++i)
    for (std::size_t j = 0; j < kEmbeddingDim; ++j) v[i] += wv.at(i, j) * token[j];
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    double expected = enc.params().get("out_b").values[i];
    for (std::size_t j = 0; j < kEmbeddingDim; ++j) expected += ow.at(i, j) * v[j];
    EXPECT_NEAR(got[i], expected, 1e-12);
  }
}

TEST(CtxEncoder, PermutingTokensLeavesOutputUnchanged) {
  Rng rng(6);
  CtxEncoder enc;
  enc.params().fill_uniform(rng, -1.0, 1.0);
  const Matrix tokens = random_matrix(3, kEmbeddingDim, rng);
  const auto base = enc.attend(tokens);
  const std::size_t perms[][3] = {{0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (const auto& perm : perms) {
    Matrix shuffled(3, kEmbeddingDim);
    for (std::size_t r = 0; r < 3; ++r)
      std::copy(tokens.row(perm[r]).begin(), tokens.row(perm[r]).end(), shuffled.row(r).begin());
    const auto got = enc.attend(shuffled);
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) EXPECT_NEAR(got[i], base[i], 1e-12);
  }
}

TEST(CtxEncoder, GradientsMatchFiniteDifferences) {
  Rng rng(9);
  CtxEncoder enc;
  enc.params().fill_uniform(rng, -0.5, 0.5);
  const auto u = random_vector(kEmbeddingDim, rng);
  for (std::optional<double> sentiment : {std::optional<double>{}, std::optional<double>{-1.0}}) {
    const ContextInput in = make_context(47.0, Device::ar_glasses, 800.0, sentiment);
    CtxEncoder::Cache cache;
    enc.encode(in, &cache);
    ParamSet grads = enc.params().zeros_like();
    enc.backward(cache, u, grads);
    expect_matches_finite_differences(enc.params(), grads, [&] { return dot(u, enc.encode(in)); });
  }
}

TEST(Context, ScalingAndClamping) {
  const auto c = make_context(60.0, Device::watch, 99.0);
  EXPECT_DOUBLE_EQ(c.task, 0.5);
  EXPECT_DOUBLE_EQ(c.lux, 2.0 / 5.0);
  EXPECT_EQ(c.device_watch, 1.0);
  EXPECT_EQ(c.device_ar, 0.0);
  const auto big = make_context(500.0, Device::ar_glasses, 1e9);
  EXPECT_EQ(big.task, 1.0);
  EXPECT_EQ(big.lux, 1.0);
  EXPECT_EQ(big.device_ar, 1.0);
  EXPECT_FALSE(big.sentiment.has_value());
}

TEST(Grad, ZeroUpstreamGivesZeroGradients) {
  Rng rng(12);
  HrEncoder hr(10);
  hr.params().fill_uniform(rng, -0.5, 0.5);
  HrEncoder::Cache cache;
  hr.encode(random_vector(10, rng), &cache);
  ParamSet g = hr.params().zeros_like();
  hr.backward(cache, std::vector<double>(kEmbeddingDim, 0.0), g);
  for (const auto& t : g.tensors()) EXPECT_TRUE(all_zero(t.values)) << t.name;
}

TEST(Grad, ZeroInputZeroParamsGivesZeroWeightGradients) {
  // loss = sum of embedding; the multiplicative weights see only zero activations
  const std::vector<double> ones(kEmbeddingDim, 1.0);
  HrEncoder hr(10);
  hr.params().fill(0.0);
  HrEncoder::Cache hc;
  hr.encode(std::vector<double>(10, 0.0), &hc);
  ParamSet hg = hr.params().zeros_like();
  hr.backward(hc, ones, hg);
  EXPECT_TRUE(all_zero(hg.get("conv_w").values));
  EXPECT_TRUE(all_zero(hg.get("out_w").values));

  SeqEncoder seq(3);
  seq.params().fill(0.0);
  SeqEncoder::Cache sc;
  seq.encode(Matrix(6, 3), &sc);
  ParamSet sg = seq.params().zeros_like();
  seq.backward(sc, ones, sg);
  for (const char* name : {"w_z", "u_z", "w_r", "u_r", "w_h", "u_h"})
    EXPECT_TRUE(all_zero(sg.get(name).values)) << name;
}

TEST(Denoiser, IdentityInitReproducesInput) {
  Rng rng(13);
  for (std::size_t k : {1u, 3u}) {
    const Denoiser d = Denoiser::identity(k);
    const Matrix x = random_matrix(30, k, rng);
    const Matrix y = d.denoise(x);
    EXPECT_EQ(y.rows, x.rows);
    EXPECT_EQ(y.cols, x.cols);
    EXPECT_EQ(y.data, x.data);
  }
}

TEST(Denoiser, ShapeIsPreservedAndMismatchRejected) {
  Rng rng(14);
  Denoiser d(3);
  d.params().fill_uniform(rng, -0.3, 0.3);
  for (std::size_t w : {1u, 4u, 5u, 17u}) {
    const Matrix y = d.denoise(random_matrix(w, 3, rng));
    EXPECT_EQ(y.rows, w);
    EXPECT_EQ(y.cols, 3u);
  }
  EXPECT_THROW(d.denoise(Matrix(10, 2)), ValidationError);
}

TEST(Denoiser, GradientsMatchFiniteDifferences) {
  Rng rng(15);
  Denoiser d(3);
  d.params().fill_uniform(rng, -0.5, 0.5);
  const Matrix x = random_matrix(12, 3, rng);
  const Matrix u = random_matrix(12, 3, rng);
  Denoiser::Cache cache;
  d.denoise(x, &cache);
  ParamSet grads = d.params().zeros_like();
  d.backward(cache, u, grads);
  expect_matches_finite_differences(d.params(), grads, [&] { return dot(u.data, d.denoise(x).data); });
}

TEST(Denoiser, TrainingHalvesHeldOutError) {
  Rng rng(16);
  Rng corpus = rng.split(1), held = rng.split(2), train = rng.split(3);
  const auto data = make_denoise_corpus(200, 30, 1, 0.3, corpus);
  const auto test = make_denoise_corpus(100, 30, 1, 0.3, held);
  Denoiser d = Denoiser::identity(1);
  const auto losses = train_denoiser(d, data, DenoiserTraining{}, train);
  EXPECT_LT(losses.back(), losses.front());
  double noisy = 0.0, denoised = 0.0;
  for (const auto& p : test) {
    noisy += mse(p.noisy, p.clean);
    denoised += mse(d.denoise(p.noisy), p.clean);
  }
  EXPECT_LE(denoised, 0.5 * noisy);
}

TEST(Denoiser, CorpusNoiseMatchesRequestedFraction) {
  // noise std = 0.3 of the clean per-channel std, so noisy MSE ~ 0.09 var(clean)
  Rng rng(17);
  const auto data = make_denoise_corpus(300, 30, 1, 0.3, rng);
  double sum = 0.0, sq = 0.0, err = 0.0;
  std::size_t n = 0;
  for (const auto& p : data)
    for (std::size_t i = 0; i < p.clean.data.size(); ++i) {
      sum += p.clean.data[i];
      sq += p.clean.data[i] * p.clean.data[i];
      err += (p.noisy.data[i] - p.clean.data[i]) * (p.noisy.data[i] - p.clean.data[i]);
      ++n;
    }
  const double var = sq / n - (sum / n) * (sum / n);
  EXPECT_NEAR(err / n / var, 0.09, 0.01);
}
