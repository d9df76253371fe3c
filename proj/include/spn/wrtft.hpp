#pragma once

// Per-range-bin short-time Fourier transform and the energy-weighted
// range-time-frequency image built from it.

#include <spn/error.hpp>
#include <spn/fft.hpp>
#include <spn/matrix.hpp>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace spn::wrtft {

enum class WindowFn { Hann, Rect, Hamming };

struct StftConfig {
  int segment_len = 32;
  int hop = 4;
  int fft_len = 64;
  WindowFn window_fn = WindowFn::Hann;
  bool one_sided = true;

  void validate() const {
    require(segment_len >= 1 && hop >= 1, ErrorCode::InvalidArgument, "segment_len and hop must be positive");
    require(segment_len <= fft_len, ErrorCode::InvalidArgument, "segment_len must not exceed fft_len");
    require(fft::is_power_of_two(static_cast<std::size_t>(fft_len)), ErrorCode::InvalidArgument,
            "fft_len must be a power of two");
  }

  int num_freqs() const { return one_sided ? fft_len / 2 + 1 : fft_len; }
  int num_frames(int n) const { return (n - segment_len) / hop + 1; }
};

/// Periodic window of length `len`.
inline std::vector<double> make_window(WindowFn fn, int len) {
  std::vector<double> w(static_cast<std::size_t>(len), 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int p = 0; p < len; ++p) {
    const double c = std::cos(two_pi * p / len);
    switch (fn) {
      case WindowFn::Rect: break;
      case WindowFn::Hann: w[static_cast<std::size_t>(p)] = 0.5 - 0.5 * c; break;
      case WindowFn::Hamming: w[static_cast<std::size_t>(p)] = 0.54 - 0.46 * c; break;
    }
  }
  return w;
}

/// Magnitude spectrograms indexed [bin][freq][frame], stored contiguously.
struct Spectrogram3D {
  int bins = 0;
  int freqs = 0;
  int frames = 0;
  std::vector<double> data;

  double& at(int m, int k, int t) { return data[index(m, k, t)]; }
  double at(int m, int k, int t) const { return data[index(m, k, t)]; }

  /// Copy of one bin's K x T spectrogram.
  Matrix bin(int m) const {
    Matrix out(freqs, frames);
    for (int k = 0; k < freqs; ++k)
      for (int t = 0; t < frames; ++t) out(k, t) = at(m, k, t);
    return out;
  }

 private:
  std::size_t index(int m, int k, int t) const {
    return (static_cast<std::size_t>(m) * freqs + k) * frames + t;
  }
};

inline Spectrogram3D stft(const Matrix& y, const StftConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(y.cols());
  require(n >= cfg.segment_len, ErrorCode::InvalidArgument,
          "signal length " + std::to_string(n) + " shorter than segment " + std::to_string(cfg.segment_len));

  Spectrogram3D s;
  s.bins = static_cast<int>(y.rows());
  s.freqs = cfg.num_freqs();
  s.frames = cfg.num_frames(n);
  s.data.assign(static_cast<std::size_t>(s.bins) * s.freqs * s.frames, 0.0);

  const auto window = make_window(cfg.window_fn, cfg.segment_len);
  std::vector<fft::Complex> buf(static_cast<std::size_t>(cfg.fft_len));
  for (int m = 0; m < s.bins; ++m) {
    for (int t = 0; t < s.frames; ++t) {
      std::fill(buf.begin(), buf.end(), fft::Complex{});
      const int offset = t * cfg.hop;
      for (int p = 0; p < cfg.segment_len; ++p)
        buf[static_cast<std::size_t>(p)] = y(m, offset + p) * window[static_cast<std::size_t>(p)];
      fft::transform(buf);
      for (int k = 0; k < s.freqs; ++k) s.at(m, k, t) = std::abs(buf[static_cast<std::size_t>(k)]);
    }
  }
  return s;
}

/// Sum of squares along slow time for every bin.
inline std::vector<double> bin_energy(const Matrix& y) {
  std::vector<double> e(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index m = 0; m < y.rows(); ++m) e[static_cast<std::size_t>(m)] = y.row(m).squaredNorm();
  return e;
}

struct WrtftFeature {
  Matrix image;                 // K x T
  std::vector<double> weights;  // per-bin energy share, sums to 1
  std::vector<double> energies;
};

/// Energy-weighted average of the per-bin spectrograms.
inline WrtftFeature wrtft(const Matrix& y, const StftConfig& cfg) {
  WrtftFeature out;
  out.energies = bin_energy(y);
  double total = 0.0;
  for (double e : out.energies) total += e;
  if (!(total > 0.0)) fail(ErrorCode::ZeroEnergy, "WRTFT input has zero total energy");

  out.weights.resize(out.energies.size());
  for (std::size_t m = 0; m < out.energies.size(); ++m) out.weights[m] = out.energies[m] / total;

  const auto spec = stft(y, cfg);
  out.image = Matrix::Zero(spec.freqs, spec.frames);
  for (int m = 0; m < spec.bins; ++m) {
    const double w = out.weights[static_cast<std::size_t>(m)];
    if (w == 0.0) continue;
    for (int k = 0; k < spec.freqs; ++k)
      for (int t = 0; t < spec.frames; ++t) out.image(k, t) += w * spec.at(m, k, t);
  }
  return out;
}

}  // namespace spn::wrtft
