#include "fatigue/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "fatigue/errors.hpp"

namespace fatigue {

Tensor& ParamSet::add(std::string name, std::vector<std::size_t> shape) {
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  tensors_.push_back(Tensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0)});
  return tensors_.back();
}

Tensor& ParamSet::get(std::string_view name) {
  for (auto& t : tensors_)
    if (t.name == name) return t;
  throw ValidationError("no parameter tensor named '" + std::string(name) + "'");
}

const Tensor& ParamSet::get(std::string_view name) const {
  return const_cast<ParamSet*>(this)->get(name);
}

std::size_t ParamSet::total_size() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out = *this;
  out.fill(0.0);
  return out;
}

void ParamSet::fill(double v) {
  for (auto& t : tensors_) std::fill(t.values.begin(), t.values.end(), v);
}

void ParamSet::fill_uniform(Rng& rng, double lo, double hi) {
  for (auto& t : tensors_)
    for (auto& v : t.values) v = rng.uniform(lo, hi);
}

void ParamSet::axpy(double scale, const ParamSet& other) {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto& dst = tensors_[i].values;
    const auto& src = other.tensors_[i].values;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

bool ParamSet::all_finite() const noexcept {
  for (const auto& t : tensors_)
    for (double v : t.values)
      if (!std::isfinite(v)) return false;
  return true;
}

void ParamSet::check_same_layout(const ParamSet& other) const {
  if (other.tensors_.size() != tensors_.size())
    throw ValidationError("parameter set has " + std::to_string(other.tensors_.size()) +
                          " tensors, expected " + std::to_string(tensors_.size()));
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = other.tensors_[i];
    if (a.name != b.name || a.shape != b.shape || b.values.size() != a.values.size())
      throw ValidationError("parameter tensor '" + b.name + "' does not match expected '" +
                            a.name + "' shape");
  }
}

}  // namespace fatigue
