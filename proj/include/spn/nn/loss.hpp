#pragma once

#include <spn/error.hpp>
#include <spn/nn/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace spn::nn {

inline constexpr double kProbFloor = 1e-12;

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;  // w.r.t. the tensor the loss was computed from
};

/// One-hot (B, C) from class indices.
template <typename T>
Tensor<T> one_hot(const std::vector<int>& labels, int classes) {
  Tensor<T> y({static_cast<int>(labels.size()), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < classes, ErrorCode::OutOfRange, "label outside class range");
    y[i * static_cast<std::size_t>(classes) + static_cast<std::size_t>(labels[i])] = T{1};
  }
  return y;
}

/// Mean categorical cross entropy -(1/B) sum_i y_i . log(p_i), probabilities
/// clamped below at 1e-12. Gradient is with respect to the probabilities.
template <typename T>
LossResult<T> cross_entropy(const Tensor<T>& y_true, const Tensor<T>& probs) {
  require(y_true.shape == probs.shape && probs.shape.size() == 2, ErrorCode::ShapeMismatch,
          "cross entropy shapes " + shape_str(y_true.shape) + " vs " + shape_str(probs.shape));
  const auto batch = static_cast<double>(probs.dim(0));
  LossResult<T> r;
  r.grad = Tensor<T>(probs.shape);
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (y_true[i] == T{}) continue;
    const double p = static_cast<double>(probs[i]);
    if (p < kProbFloor) {
      sum += static_cast<double>(y_true[i]) * std::log(kProbFloor);
      continue;
    }
    sum += static_cast<double>(y_true[i]) * std::log(p);
    r.grad[i] = static_cast<T>(-static_cast<double>(y_true[i]) / (p * batch));
  }
  r.loss = -sum / batch;
  return r;
}

/// Gradient of softmax + cross entropy with respect to the logits: (p - y) / B.
template <typename T>
Tensor<T> softmax_cross_entropy_logit_grad(const Tensor<T>& y_true, const Tensor<T>& probs) {
  require(y_true.shape == probs.shape, ErrorCode::ShapeMismatch, "shape mismatch");
  const T inv = static_cast<T>(1.0 / probs.dim(0));
  Tensor<T> g(probs.shape);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (probs[i] - y_true[i]) * inv;
  return g;
}

}  // namespace spn::nn
