#include <spn/fft.hpp>
#include <spn/wrtft.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace spn::wrtft {
namespace {

using test::error_code_of;

std::vector<fft::Complex> naive_dft(const std::vector<fft::Complex>& x) {
  const auto n = x.size();
  std::vector<fft::Complex> out(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t p = 0; p < n; ++p)
      out[k] += x[p] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * p) / static_cast<double>(n));
  return out;
}

std::vector<fft::Complex> random_signal(std::size_t n, Rng& rng) {
  std::vector<fft::Complex> x(n);
  for (auto& v : x) v = {uniform(rng, -1, 1), uniform(rng, -1, 1)};
  return x;
}

double max_abs_diff(const std::vector<fft::Complex>& a, const std::vector<fft::Complex>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

TEST(Fft, MatchesNaiveDft) {
  Rng rng(1);
  for (std::size_t n : {1u, 2u, 8u, 64u, 256u}) {
    const auto x = random_signal(n, rng);
    EXPECT_LE(max_abs_diff(fft::forward(x), naive_dft(x)), 1e-9) << n;
  }
}

TEST(Fft, InverseRoundTrip) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_signal(64, rng);
    EXPECT_LE(max_abs_diff(fft::inverse(fft::forward(x)), x), 1e-12);
  }
}

TEST(Fft, RejectsNonPowerOfTwo) {
  std::vector<fft::Complex> x(12);
  EXPECT_EQ(error_code_of([&] { fft::transform(x); }), ErrorCode::InvalidArgument);
}

TEST(Window, HannIsPeriodic) {
  const auto w = make_window(WindowFn::Hann, 32);
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_NEAR(w[16], 1.0, 1e-15);
  for (int p = 1; p < 32; ++p) EXPECT_NEAR(w[static_cast<std::size_t>(p)], w[static_cast<std::size_t>(32 - p)], 1e-15);
}

TEST(Stft, DefaultShape) {
  Rng rng(3);
  const auto s = stft(test::random_matrix(40, 160, rng), StftConfig{});
  EXPECT_EQ(s.bins, 40);
  EXPECT_EQ(s.freqs, 33);
  EXPECT_EQ(s.frames, 33);
}

TEST(Stft, SinusoidPeaksAtItsBin) {
  StftConfig cfg;
  cfg.window_fn = WindowFn::Rect;
  for (int k0 : {3, 8, 20}) {
    Matrix y(1, 160);
    for (int n = 0; n < 160; ++n) y(0, n) = std::cos(2.0 * std::numbers::pi * k0 * n / cfg.fft_len);
    const auto s = stft(y, cfg);
    for (int t = 0; t < s.frames; ++t) {
      int best = 0;
      for (int k = 1; k < s.freqs; ++k)
        if (s.at(0, k, t) > s.at(0, best, t)) best = k;
      EXPECT_EQ(best, k0) << "frame " << t;
    }
  }
}

TEST(Stft, ZeroInputZeroOutput) {
  const auto s = stft(Matrix::Zero(3, 64), StftConfig{});
  for (double v : s.data) EXPECT_EQ(v, 0.0);
}

TEST(Stft, TooShortRejected) {
  EXPECT_EQ(error_code_of([] { stft(Matrix::Ones(2, 31), StftConfig{}); }), ErrorCode::InvalidArgument);
}

TEST(Stft, InvalidConfigRejected) {
  StftConfig bad;
  bad.fft_len = 48;
  EXPECT_EQ(error_code_of([&] { bad.validate(); }), ErrorCode::InvalidArgument);
  bad = {};
  bad.segment_len = 128;
  EXPECT_EQ(error_code_of([&] { bad.validate(); }), ErrorCode::InvalidArgument);
  bad = {};
  bad.hop = 0;
  EXPECT_EQ(error_code_of([&] { bad.validate(); }), ErrorCode::InvalidArgument);
}

TEST(BinEnergy, Examples) {
  const auto e = bin_energy(from_rows({{3, 4}, {0, 0}}));
  EXPECT_DOUBLE_EQ(e[0], 25.0);
  EXPECT_DOUBLE_EQ(e[1], 0.0);

  Rng rng(4);
  const Matrix y = test::random_matrix(6, 9, rng);
  const auto got = bin_energy(y);
  for (int m = 0; m < 6; ++m) {
    double s = 0.0;
    for (int n = 0; n < 9; ++n) s += y(m, n) * y(m, n);
    EXPECT_NEAR(got[static_cast<std::size_t>(m)], s, 1e-12);
  }
}

TEST(Wrtft, WeightsFromEnergies) {
  Matrix y = Matrix::Zero(2, 64);
  y(0, 10) = 1.0;
  y(1, 10) = std::sqrt(3.0);
  const auto f = wrtft(y, StftConfig{});
  EXPECT_NEAR(f.weights[0], 0.25, 1e-12);
  EXPECT_NEAR(f.weights[1], 0.75, 1e-12);
}

TEST(Wrtft, SingleEnergeticBinIsThatSpectrogram) {
  Rng rng(5);
  Matrix y = Matrix::Zero(5, 160);
  y.row(2) = test::random_matrix(1, 160, rng);
  const auto f = wrtft(y, StftConfig{});
  EXPECT_EQ(f.image, stft(y, StftConfig{}).bin(2));
}

TEST(Wrtft, IdenticalBinsGiveThatSpectrogram) {
  Rng rng(6);
  Matrix y(3, 100);
  y.rowwise() = test::random_matrix(1, 100, rng).row(0);
  const auto f = wrtft(y, StftConfig{});
  EXPECT_LE((f.image - stft(y, StftConfig{}).bin(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Wrtft, ZeroEnergyRejected) {
  EXPECT_EQ(error_code_of([] { wrtft(Matrix::Zero(4, 64), StftConfig{}); }), ErrorCode::ZeroEnergy);
}

TEST(Wrtft, ConvexHullAndProbabilityWeights) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix y = test::random_matrix(8, 96, rng);
    const auto f = wrtft(y, StftConfig{});
    double sum = 0.0;
    for (double w : f.weights) {
      EXPECT_GE(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    const auto s = stft(y, StftConfig{});
    for (int k = 0; k < s.freqs; ++k)
      for (int t = 0; t < s.frames; ++t) {
        double lo = s.at(0, k, t), hi = lo;
        for (int m = 1; m < s.bins; ++m) {
          lo = std::min(lo, s.at(m, k, t));
          hi = std::max(hi, s.at(m, k, t));
        }
        EXPECT_GE(f.image(k, t), lo - 1e-12);
        EXPECT_LE(f.image(k, t), hi + 1e-12);
      }
  }
}

TEST(Wrtft, ScalingBehaviour) {
  Rng rng(8);
  const Matrix y = test::random_matrix(4, 64, rng);
  const double c = -2.5;
  const auto a = wrtft(y, StftConfig{});
  const auto b = wrtft(c * y, StftConfig{});
  for (std::size_t m = 0; m < a.weights.size(); ++m) {
    EXPECT_NEAR(b.energies[m], c * c * a.energies[m], 1e-9);
    EXPECT_NEAR(b.weights[m], a.weights[m], 1e-12);
  }
  EXPECT_LE((b.image - std::abs(c) * a.image).cwiseAbs().maxCoeff(), 1e-9);
}

}  // namespace
}  // namespace spn::wrtft
