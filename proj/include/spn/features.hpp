#pragma once

// Frame matrix -> cropped clutter-free matrix -> (TD, WRTFT) network views.

#include <spn/dataformat.hpp>
#include <spn/dsp.hpp>
#include <spn/matrix.hpp>
#include <spn/wrtft.hpp>

#include <cmath>
#include <vector>

namespace spn {

struct Preprocessed {
  Matrix cropped;  // WS x N slice of the suppressed matrix
  dsp::RangeWindow window;
};

/// DC and background suppression, then range selection on the differenced matrix.
inline Preprocessed preprocess(const Matrix& frames, int ws) {
  const Matrix y = dsp::background_suppress(dsp::dc_suppress(frames));
  const Matrix yd = dsp::time_difference(y);
  const auto window = dsp::select_range_window(yd, ws);
  return {dsp::crop(y, window), window};
}

/// Cropped copy of a sample; metadata preserved.
inline LabeledSample preprocess_sample(const LabeledSample& s, int ws) {
  LabeledSample out = s;
  out.frames = preprocess(s.frames, ws).cropped;
  return out;
}

/// Zero mean, unit variance over all entries. Constant input maps to zeros.
inline std::vector<float> standardize(const Matrix& m) {
  const double mean = m.mean();
  const double var = (m.array() - mean).square().mean();
  const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
  std::vector<float> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>((m.data()[i] - mean) * inv);
  return out;
}

struct ViewShape {
  int rows = 0;
  int cols = 0;
  bool operator==(const ViewShape&) const = default;
};

/// Both network views for one sample, standardized, row-major.
struct Example {
  std::vector<float> td;     // WS x (N - 1)
  std::vector<float> wrtft;  // K x T
  int label = 0;
  std::uint64_t sample_id = 0;
  int participant_id = 0;
  int session_id = 1;
};

struct FeatureConfig {
  int ws = dsp::kDefaultWindowSize;
  wrtft::StftConfig stft;

  ViewShape td_shape(int n) const { return {ws, n - 1}; }
  ViewShape wrtft_shape(int n) const { return {stft.num_freqs(), stft.num_frames(n)}; }
};

/// Views from an already cropped matrix (augmentation happens before this).
inline Example featurize_cropped(const LabeledSample& cropped, const FeatureConfig& cfg) {
  Example ex;
  ex.td = standardize(dsp::time_difference(cropped.frames));
  ex.wrtft = standardize(wrtft::wrtft(cropped.frames, cfg.stft).image);
  ex.label = static_cast<int>(cropped.label);
  ex.sample_id = cropped.sample_id;
  ex.participant_id = cropped.participant_id;
  ex.session_id = cropped.session_id;
  return ex;
}

}  // namespace spn
