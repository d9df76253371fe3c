#pragma once

// Central finite-difference checks for layers and whole networks (double precision).

#include <spn/nn/layers.hpp>
#include <spn/nn/loss.hpp>
#include <spn/nn/model.hpp>
#include <spn/random.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

namespace spn::test {

using nn::Tensor;

inline constexpr double kStep = 1e-5;

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-5, std::abs(analytic) + std::abs(numeric));
}

/// Fourth-order central difference of `loss` with respect to `v`, or nullopt
/// when a ReLU or max-pool switch lies inside the stencil. A kink makes the
/// second differences jump by about h * slope change; on smooth stretches they
/// stay of order h^2.
template <typename F>
std::optional<double> central_difference(double& v, F&& loss) {
  const double orig = v;
  std::array<double, 5> f{};
  for (int k = -2; k <= 2; ++k) {
    v = orig + k * kStep;
    f[static_cast<std::size_t>(k + 2)] = loss();
  }
  v = orig;
  const double d1 = (f[3] - f[1]) / (2.0 * kStep);
  const double d2 = (f[4] - f[0]) / (4.0 * kStep);
  double curvature = 0.0;
  for (std::size_t k = 1; k < 4; ++k) curvature = std::max(curvature, std::abs(f[k + 1] - 2.0 * f[k] + f[k - 1]));
  if (curvature > 1e-2 * kStep * (std::abs(d1) + 1e-5)) return std::nullopt;
  return (4.0 * d1 - d2) / 3.0;
}

struct GradCheck {
  double worst = 0.0;
  int probes = 0;
  int skipped = 0;

  void add(double analytic, double numeric) {
    worst = std::max(worst, rel_err(analytic, numeric));
    ++probes;
  }

  /// Probes `draws` random entries of `values`, redrawing any that straddle a kink.
  template <typename F>
  void probe(std::vector<double>& values, const std::vector<double>& grad, int draws, Rng& rng, F&& loss) {
    for (int d = 0; d < draws; ++d)
      for (int attempt = 0; attempt < 10; ++attempt) {
        const std::size_t i = rng() % values.size();
        if (const auto n = central_difference(values[i], loss)) {
          add(grad[i], *n);
          break;
        }
        ++skipped;
      }
  }
};

inline Tensor<double> random_tensor(nn::Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values) v = normal(rng, 0.0, 1.0);
  return t;
}

/// Values well away from zero so ReLU kinks sit outside the probe step.
inline Tensor<double> kink_free_tensor(nn::Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values) {
    const double mag = uniform(rng, 0.05, 1.5);
    v = uniform(rng, 0.0, 1.0) < 0.5 ? -mag : mag;
  }
  return t;
}

/// Distinct values spaced >= 1e-3 apart so max-pool winners never tie.
inline Tensor<double> distinct_tensor(nn::Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1e-2 * static_cast<double>(i);
  std::shuffle(v.begin(), v.end(), rng);
  t.values = std::move(v);
  return t;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Scalar loss L(x) = <w, layer(x)> with random w. Probes `draws` random
/// input entries and `draws` random entries of every parameter tensor.
inline GradCheck check_layer(nn::Layer<double>& layer, Tensor<double> x, Rng& rng, int draws) {
  GradCheck gc;
  const auto y0 = layer.forward(x, true);
  const auto w = random_tensor(y0.shape, rng);
  auto loss = [&] { return dot(w, layer.forward(x, true)); };

  for (auto* p : layer.params()) p->zero_grad();
  layer.forward(x, true);
  const auto dx = layer.backward(w);

  gc.probe(x.values, dx.values, draws, rng, loss);
  for (auto* p : layer.params()) gc.probe(p->values, p->grad, draws, rng, loss);
  return gc;
}

template <typename T>
void freeze_dropout(nn::Sequential<T>& seq) {
  for (std::size_t k = 0; k < seq.size(); ++k)
    if (auto* d = dynamic_cast<nn::Dropout<T>*>(&seq[k])) d->freeze_mask(true);
}

template <typename T>
void freeze_dropout(nn::Network<T>& net) {
  for (auto& b : net.branches()) freeze_dropout(b);
  freeze_dropout(net.head());
}

/// Cross-entropy of the full network against random labels; probes `draws`
/// random entries of every parameter tensor. Dropout masks are frozen after
/// the first pass so the loss is a fixed function of the parameters.
inline GradCheck check_network(nn::Network<double>& net, const std::vector<Tensor<double>>& inputs, Rng& rng, int draws) {
  GradCheck gc;
  const int batch = inputs.front().dim(0);
  std::vector<int> labels;
  for (int b = 0; b < batch; ++b) labels.push_back(static_cast<int>(rng() % static_cast<unsigned>(net.num_classes())));
  const auto y = nn::one_hot<double>(labels, net.num_classes());

  net.forward(inputs, true);
  freeze_dropout(net);
  auto loss = [&] { return nn::cross_entropy(y, net.forward(inputs, true)).loss; };

  net.zero_grad();
  const auto probs = net.forward(inputs, true);
  net.backward(nn::cross_entropy(y, probs).grad);

  for (auto* p : net.params()) gc.probe(p->values, p->grad, draws, rng, loss);
  return gc;
}

/// Small SPN whose TD branch still survives three 2x3 pools.
inline nn::ModelSpec small_spn_spec(nn::Architecture arch = nn::Architecture::Spn) {
  nn::ModelSpec s;
  s.architecture = arch;
  s.td_input_shape = {8, 27};
  s.wrtft_input_shape = {9, 9};
  s.td_head_units = {6};
  s.wrtft_head_units = {5, 4};
  s.fusion_units = {8, 6};
  s.seed = 11;
  return s;
}

inline std::vector<Tensor<double>> random_inputs(const nn::Network<double>& net, int batch, Rng& rng) {
  std::vector<Tensor<double>> in;
  for (const auto& s : net.input_shapes()) in.push_back(random_tensor({batch, s[0], s[1], s[2]}, rng));
  return in;
}

}  // namespace spn::test
