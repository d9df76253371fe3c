#pragma once

#include <spn/error.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace spn::nn {

using Shape = std::vector<int>;

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

/// Dense n-d array, row-major, with an optional gradient buffer of the same size.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T{}) : shape(std::move(s)), values(shape_size(shape), fill) {}
  Tensor(Shape s, std::vector<T> v) : shape(std::move(s)), values(std::move(v)) {
    require(values.size() == shape_size(shape), ErrorCode::ShapeMismatch, "tensor data does not match shape");
  }

  std::size_t size() const { return values.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  T* data() { return values.data(); }
  const T* data() const { return values.data(); }
  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }

  void enable_grad() { grad.assign(values.size(), T{}); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T{}); }
  bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](T v) { return std::isfinite(v); });
  }

  Tensor reshaped(Shape s) const {
    require(shape_size(s) == values.size(), ErrorCode::ShapeMismatch,
            "cannot reshape " + shape_str(shape) + " to " + shape_str(s));
    Tensor out;
    out.shape = std::move(s);
    out.values = values;
    return out;
  }
};

}  // namespace spn::nn
