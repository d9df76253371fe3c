#pragma once

// Clutter suppression, slow-time differencing and range-window selection.

#include <spn/error.hpp>
#include <spn/matrix.hpp>

#include <string>
#include <vector>

namespace spn::dsp {

/// Contiguous block of range bins [start, end].
struct RangeWindow {
  int start = 0;
  int end = 0;

  int size() const { return end - start + 1; }
  bool operator==(const RangeWindow&) const = default;
};

inline constexpr int kDefaultWindowSize = 40;

/// Removes each range bin's mean over slow time.
inline Matrix dc_suppress(const Matrix& r) {
  require(r.cols() >= 1, ErrorCode::InvalidArgument, "dc_suppress needs at least one column");
  return r.colwise() - r.rowwise().mean();
}

/// Removes each slow-time column's mean over range (static clutter).
inline Matrix background_suppress(const Matrix& rbar) {
  require(rbar.rows() >= 1, ErrorCode::InvalidArgument, "background_suppress needs at least one row");
  return rbar.rowwise() - rbar.colwise().mean();
}

/// First difference along slow time: out(m, n) = y(m, n + 1) - y(m, n).
inline Matrix time_difference(const Matrix& y) {
  require(y.cols() >= 2, ErrorCode::InvalidArgument, "time_difference needs N >= 2");
  const auto n = y.cols();
  return y.rightCols(n - 1) - y.leftCols(n - 1);
}

/// Squared-sum of every row.
inline std::vector<double> row_energies(const Matrix& m) {
  std::vector<double> e(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) e[static_cast<std::size_t>(i)] = m.row(i).squaredNorm();
  return e;
}

/// Window of `ws` rows maximizing the summed squared difference energy.
/// Prefix sums over row energies, O(M*N). Ties go to the smallest start.
inline RangeWindow select_range_window(const Matrix& yd, int ws) {
  const auto m = static_cast<int>(yd.rows());
  require(ws >= 1, ErrorCode::InvalidArgument, "window size must be positive");
  require(ws <= m, ErrorCode::InvalidArgument,
          "window size " + std::to_string(ws) + " exceeds " + std::to_string(m) + " range bins");

  const auto energy = row_energies(yd);
  std::vector<double> prefix(energy.size() + 1, 0.0);
  for (std::size_t i = 0; i < energy.size(); ++i) prefix[i + 1] = prefix[i] + energy[i];

  int best = 0;
  double best_energy = prefix[ws] - prefix[0];
  for (int i = 1; i + ws <= m; ++i) {
    const double e = prefix[i + ws] - prefix[i];
    if (e > best_energy) {
      best_energy = e;
      best = i;
    }
  }
  return {best, best + ws - 1};
}

inline Matrix crop(const Matrix& y, const RangeWindow& w) {
  require(w.start >= 0 && w.start <= w.end && w.end < y.rows(), ErrorCode::OutOfRange,
          "window [" + std::to_string(w.start) + ", " + std::to_string(w.end) + "] outside " +
              std::to_string(y.rows()) + " rows");
  return y.middleRows(w.start, w.size());
}

}  // namespace spn::dsp
