#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fatigue/rng.hpp"

namespace fatigue {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

// Named parameter tensor with a fixed shape; values are row-major.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }

  // 2-D and 3-D row-major accessors.
  double& at(std::size_t i, std::size_t j) { return values[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * shape[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return values[(i * shape[1] + j) * shape[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * shape[1] + j) * shape[2] + k];
  }

  bool operator==(const Tensor&) const = default;
};

// Ordered collection of tensors belonging to one model component.
// Gradients are stored in a ParamSet with identical layout.
class ParamSet {
 public:
  Tensor& add(std::string name, std::vector<std::size_t> shape);

  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;

  std::size_t count() const noexcept { return tensors_.size(); }
  std::size_t total_size() const noexcept;
  std::span<Tensor> tensors() noexcept { return tensors_; }
  std::span<const Tensor> tensors() const noexcept { return tensors_; }

  ParamSet zeros_like() const;
  void fill(double v);
  void fill_uniform(Rng& rng, double lo, double hi);
  // this += scale * other; layouts must match.
  void axpy(double scale, const ParamSet& other);
  bool all_finite() const noexcept;
  // Throws ValidationError unless other has identical names and shapes.
  void check_same_layout(const ParamSet& other) const;

  bool operator==(const ParamSet&) const = default;

 private:
  std::vector<Tensor> tensors_;
};

}  // namespace fatigue
