#pragma once

#include <spn/error.hpp>
#include <spn/nn/tensor.hpp>

#include <cmath>
#include <vector>

namespace spn::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  long step = 0;
};

/// One bias-corrected Adam update over every parameter tensor, using the
/// gradients stored in each tensor's grad buffer.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, AdamState<T>& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.emplace_back(p->size(), T{});
      state.v.emplace_back(p->size(), T{});
    }
  }
  require(state.m.size() == params.size(), ErrorCode::ShapeMismatch, "Adam state does not match parameters");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    require(m.size() == p.size() && p.grad.size() == p.size(), ErrorCode::ShapeMismatch, "Adam buffer size mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const T g = p.grad[i];
      m[i] = b1 * m[i] + (T{1} - b1) * g;
      v[i] = b2 * v[i] + (T{1} - b2) * g * g;
      const double mhat = static_cast<double>(m[i]) / c1;
      const double vhat = static_cast<double>(v[i]) / c2;
      p.values[i] -= static_cast<T>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

}  // namespace spn::nn
