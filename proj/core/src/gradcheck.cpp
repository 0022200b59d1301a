#include "fatigue/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fatigue/detector.hpp"
#include "fatigue/encoders.hpp"
#include "fatigue/errors.hpp"

namespace fatigue {

double relative_error(double analytic, double numeric, double floor) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

std::vector<TensorCheck> check_gradients(std::span<ParamSet* const> params,
                                         std::span<const std::string> component_names,
                                         std::span<const ParamSet> analytic,
                                         const std::function<double()>& loss,
                                         const GradcheckOptions& options) {
  if (params.size() != analytic.size() || params.size() != component_names.size())
    throw ValidationError("gradcheck: parameter, gradient and name counts differ");
  std::vector<TensorCheck> out;
  for (std::size_t c = 0; c < params.size(); ++c) {
    params[c]->check_same_layout(analytic[c]);
    for (std::size_t t = 0; t < params[c]->count(); ++t) {
      Tensor& tensor = (*params[c])[t];
      const Tensor& grad = analytic[c][t];
      TensorCheck check{component_names[c], tensor.name, tensor.size(), 0.0, true};
      for (std::size_t i = 0; i < tensor.size(); ++i) {
        const double saved = tensor.values[i];
        tensor.values[i] = saved + options.step;
        const double up = loss();
        tensor.values[i] = saved - options.step;
        const double down = loss();
        tensor.values[i] = saved;
        const double numeric = (up - down) / (2.0 * options.step);
        if (!std::isfinite(numeric)) throw NumericError("gradcheck: non-finite loss");
        check.max_rel_error = std::max(check.max_rel_error, relative_error(grad.values[i], numeric, options.floor));
      }
      check.passed = check.max_rel_error <= options.tolerance;
      out.push_back(std::move(check));
    }
  }
  return out;
}

namespace {

WindowFeatures random_features(std::size_t window, Rng& rng, bool with_sentiment) {
  WindowFeatures f;
  f.hr.resize(window);
  f.eye = Matrix(window, 3);
  f.gsr = Matrix(window, 1);
  for (auto& v : f.hr) v = rng.normal();
  for (std::size_t t = 0; t < window; ++t) {
    f.eye(t, 0) = rng.normal();
    f.eye(t, 1) = rng.bernoulli(0.3) ? 1.0 : 0.0;
    f.eye(t, 2) = rng.normal();
    f.gsr(t, 0) = rng.normal();
  }
  f.ctx = make_context(rng.uniform(0.0, 150.0), rng.bernoulli(0.5) ? Device::watch : Device::ar_glasses,
                       rng.uniform(0.0, 5000.0),
                       with_sentiment ? std::optional<double>(static_cast<double>(rng.index(3)) - 1.0)
                                      : std::nullopt);
  return f;
}

void corrupt_gradient(std::vector<std::string> const& names, std::span<ParamSet> grads,
                      const std::string& target) {
  const auto dot = target.find('.');
  if (dot == std::string::npos) throw ValidationError("corrupt target must be component.tensor");
  const std::string comp = target.substr(0, dot), tensor = target.substr(dot + 1);
  for (std::size_t c = 0; c < names.size(); ++c)
    if (names[c] == comp) {
      auto& v = grads[c].get(tensor).values;
      v[0] += 1.0 + std::abs(v[0]);
      return;
    }
  throw ValidationError("corrupt target '" + target + "' names no component");
}

}  // namespace

std::vector<TensorCheck> gradcheck_model(std::uint64_t seed, const GradcheckOptions& options) {
  constexpr std::size_t kWindow = 12;
  constexpr std::size_t kBatch = 4;
  const Rng root(seed);
  Rng init = root.split(1);
  Rng data = root.split(2);

  // Wider init than training so every nonlinearity is exercised.
  Detector det(DetectorOptions{kWindow, kEmbeddingDim, kAllModalities}, init);
  for (auto* p : det.param_sets()) p->fill_uniform(init, -0.5, 0.5);

  std::vector<WindowFeatures> batch;
  std::vector<int> labels;
  for (std::size_t i = 0; i < kBatch; ++i) {
    batch.push_back(random_features(kWindow, data, i % 2 == 0));
    labels.push_back(static_cast<int>(data.index(kLevels)));
  }
  const auto det_loss = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < kBatch; ++i) total += det.loss_and_grad(batch[i], labels[i], nullptr);
    return total / static_cast<double>(kBatch);
  };
  Gradients grads = det.zero_gradients();
  for (std::size_t i = 0; i < kBatch; ++i) det.loss_and_grad(batch[i], labels[i], &grads);
  for (auto& g : grads)
    for (auto& t : g.tensors())
      for (auto& v : t.values) v /= static_cast<double>(kBatch);

  std::vector<std::string> names(Detector::kComponentNames.begin(), Detector::kComponentNames.end());

  // Denoisers under a squared-error loss against a random target.
  std::vector<Denoiser> denoisers{Denoiser(3), Denoiser(1)};
  std::vector<std::pair<Matrix, Matrix>> dn_data;
  for (auto& d : denoisers) {
    d.params().fill_uniform(init, -0.5, 0.5);
    Matrix x(kWindow, d.channels()), y(kWindow, d.channels());
    for (auto& v : x.data) v = data.normal();
    for (auto& v : y.data) v = data.normal();
    dn_data.emplace_back(std::move(x), std::move(y));
  }
  const auto dn_loss = [&](std::size_t k) {
    return mse(denoisers[k].denoise(dn_data[k].first), dn_data[k].second);
  };

  std::vector<ParamSet*> params = det.param_sets();
  std::vector<ParamSet> analytic = std::move(grads);
  for (std::size_t k = 0; k < denoisers.size(); ++k) {
    Denoiser::Cache cache;
    const Matrix out = denoisers[k].denoise(dn_data[k].first, &cache);
    Matrix d_out(out.rows, out.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      d_out.data[i] = 2.0 * (out.data[i] - dn_data[k].second.data[i]) / static_cast<double>(out.data.size());
    ParamSet g = denoisers[k].params().zeros_like();
    denoisers[k].backward(cache, d_out, g);
    params.push_back(&denoisers[k].params());
    analytic.push_back(std::move(g));
    names.push_back(k == 0 ? "denoiser_eye" : "denoiser_gsr");
  }

  if (options.corrupt) corrupt_gradient(names, analytic, *options.corrupt);

  const std::size_t n_det = Detector::kComponentNames.size();
  std::vector<TensorCheck> out;
  {
    const auto r = check_gradients(std::span(params).first(n_det), std::span(names).first(n_det),
                                   std::span(analytic).first(n_det), det_loss, options);
    out.insert(out.end(), r.begin(), r.end());
  }
  for (std::size_t k = 0; k < denoisers.size(); ++k) {
    const auto r = check_gradients(std::span(params).subspan(n_det + k, 1), std::span(names).subspan(n_det + k, 1),
                                   std::span(analytic).subspan(n_det + k, 1), [&] { return dn_loss(k); }, options);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

}  // namespace fatigue
