#pragma once

// Time shift, range shift, time warping and magnitude warping of cropped
// frame matrices, plus static expansion of a training set over operator
// combinations.

#include <spn/dataformat.hpp>
#include <spn/error.hpp>
#include <spn/matrix.hpp>
#include <spn/random.hpp>
#include <spn/spline.hpp>

#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

namespace spn::augment {

/// Shifts columns right by `shift` (left if negative); vacated columns are zero.
inline Matrix time_shift(const Matrix& x, int shift) {
  const auto n = static_cast<int>(x.cols());
  require(std::abs(shift) < n, ErrorCode::InvalidArgument, "|time shift| must be below the column count");
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  if (shift >= 0)
    out.rightCols(n - shift) = x.leftCols(n - shift);
  else
    out.leftCols(n + shift) = x.rightCols(n + shift);
  return out;
}

/// Shifts rows up by `shift` (down if negative); vacated rows are zero.
inline Matrix range_shift(const Matrix& x, int shift) {
  const auto m = static_cast<int>(x.rows());
  require(std::abs(shift) < m, ErrorCode::InvalidArgument, "|range shift| must be below the row count");
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  if (shift >= 0)
    out.topRows(m - shift) = x.bottomRows(m - shift);
  else
    out.bottomRows(m + shift) = x.topRows(m + shift);
  return out;
}

/// Smooth random curve of length n around 1: cubic spline through
/// knots + 2 evenly spaced N(1, sigma) control points spanning [0, n - 1].
inline std::vector<double> random_curve(int n, double sigma, int knots, Rng& rng) {
  require(sigma >= 0.0, ErrorCode::InvalidArgument, "sigma must be non-negative");
  require(knots >= 1, ErrorCode::InvalidArgument, "knots must be positive");
  require(n >= 2, ErrorCode::InvalidArgument, "curve needs at least two samples");
  const int points = knots + 2;
  std::vector<double> xs(static_cast<std::size_t>(points)), ys(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    xs[static_cast<std::size_t>(i)] = static_cast<double>(n - 1) * i / (points - 1);
    ys[static_cast<std::size_t>(i)] = normal(rng, 1.0, sigma);
  }
  const CubicSpline spline(std::move(xs), std::move(ys));
  std::vector<double> curve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) curve[static_cast<std::size_t>(i)] = spline(static_cast<double>(i));
  return curve;
}

/// Monotone time map t(0) = 0, t(n - 1) = n - 1 whose local speed follows a
/// random curve. Resamples curves that would fold time back on itself.
inline std::vector<double> random_time_warp(int n, double sigma, int knots, Rng& rng) {
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const auto speed = random_curve(n, sigma, knots, rng);
    std::vector<double> t(static_cast<std::size_t>(n), 0.0);
    bool monotone = true;
    for (int i = 1; i < n; ++i) {
      const double step = 0.5 * (speed[static_cast<std::size_t>(i - 1)] + speed[static_cast<std::size_t>(i)]);
      if (!(step > 0.0)) {
        monotone = false;
        break;
      }
      t[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(i - 1)] + step;
    }
    if (!monotone) continue;
    const double scale = static_cast<double>(n - 1) / t.back();
    for (auto& v : t) v *= scale;
    t.back() = static_cast<double>(n - 1);
    bool increasing = true;
    for (int i = 1; i < n && increasing; ++i)
      increasing = t[static_cast<std::size_t>(i)] > t[static_cast<std::size_t>(i - 1)];
    if (increasing) return t;
  }
  fail(ErrorCode::Runtime, "time warp: no monotone warp after 100 attempts");
}

/// Resamples every row at one shared warped time axis via cubic spline interpolation.
inline Matrix apply_time_warp(const Matrix& x, const std::vector<double>& warp) {
  require(static_cast<Eigen::Index>(warp.size()) == x.cols(), ErrorCode::ShapeMismatch, "warp length != N");
  Matrix out(x.rows(), x.cols());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index m = 0; m < x.rows(); ++m) {
    for (Eigen::Index n = 0; n < x.cols(); ++n) row[static_cast<std::size_t>(n)] = x(m, n);
    const auto spline = CubicSpline::uniform(row);
    for (Eigen::Index n = 0; n < x.cols(); ++n) out(m, n) = spline(warp[static_cast<std::size_t>(n)]);
  }
  return out;
}

inline Matrix time_warp(const Matrix& x, double sigma, int knots, Rng& rng) {
  require(x.cols() >= 4, ErrorCode::InvalidArgument, "time warp needs N >= 4");
  return apply_time_warp(x, random_time_warp(static_cast<int>(x.cols()), sigma, knots, rng));
}

inline Matrix apply_magnitude_curve(const Matrix& x, const std::vector<double>& curve) {
  require(static_cast<Eigen::Index>(curve.size()) == x.cols(), ErrorCode::ShapeMismatch, "curve length != N");
  const Eigen::Map<const Eigen::RowVectorXd> c(curve.data(), static_cast<Eigen::Index>(curve.size()));
  return x.array().rowwise() * c.array();
}

inline Matrix magnitude_warp(const Matrix& x, double sigma, int knots, Rng& rng) {
  return apply_magnitude_curve(x, random_curve(static_cast<int>(x.cols()), sigma, knots, rng));
}

// ---------------------------------------------------------------------------
// Expansion
// ---------------------------------------------------------------------------

enum AugmentOp : unsigned { kTimeShift = 1u, kRangeShift = 2u, kTimeWarp = 4u, kMagnitudeWarp = 8u };

/// Bitmask over AugmentOp.
using AugmentCombo = unsigned;

inline std::string combo_name(AugmentCombo c) {
  if (c == 0) return "orig";
  std::string s;
  auto add = [&](unsigned bit, const char* name) {
    if (c & bit) s += (s.empty() ? "" : "+") + std::string(name);
  };
  add(kTimeShift, "TS");
  add(kRangeShift, "RS");
  add(kTimeWarp, "TW");
  add(kMagnitudeWarp, "MW");
  return s;
}

inline std::vector<AugmentCombo> all_nonempty_combos() {
  std::vector<AugmentCombo> v;
  for (AugmentCombo c = 1; c < 16; ++c) v.push_back(c);
  return v;
}

struct AugmentSpec {
  std::vector<int> ts_shifts = {-10, -5, 5, 10};
  std::vector<int> rs_shifts = {2, 4};
  double tw_sigma = 0.4;
  double mw_sigma = 0.4;
  int knots = 4;
  std::vector<AugmentCombo> combos = all_nonempty_combos();
  std::uint64_t rng_seed = 0;

  void validate() const {
    require(tw_sigma >= 0.0 && mw_sigma >= 0.0, ErrorCode::InvalidArgument, "augment sigmas must be >= 0");
    require(knots >= 1, ErrorCode::InvalidArgument, "knots must be >= 1");
    for (auto c : combos) require(c >= 1 && c < 16, ErrorCode::InvalidArgument, "combo must be a non-empty subset");
    bool uses_ts = false, uses_rs = false;
    for (auto c : combos) {
      uses_ts |= (c & kTimeShift) != 0;
      uses_rs |= (c & kRangeShift) != 0;
    }
    require(!uses_ts || !ts_shifts.empty(), ErrorCode::InvalidArgument, "TS used with empty shift set");
    require(!uses_rs || !rs_shifts.empty(), ErrorCode::InvalidArgument, "RS used with empty shift set");
  }
};

/// Applies the operators in `combo` in fixed order TS -> RS -> TW -> MW.
inline Matrix apply_combo(const Matrix& x, AugmentCombo combo, const AugmentSpec& spec, Rng& rng) {
  Matrix out = x;
  if (combo & kTimeShift) {
    const int i = uniform_int(rng, 0, static_cast<int>(spec.ts_shifts.size()) - 1);
    out = time_shift(out, spec.ts_shifts[static_cast<std::size_t>(i)]);
  }
  if (combo & kRangeShift) {
    const int i = uniform_int(rng, 0, static_cast<int>(spec.rs_shifts.size()) - 1);
    out = range_shift(out, spec.rs_shifts[static_cast<std::size_t>(i)]);
  }
  if (combo & kTimeWarp) out = time_warp(out, spec.tw_sigma, spec.knots, rng);
  if (combo & kMagnitudeWarp) out = magnitude_warp(out, spec.mw_sigma, spec.knots, rng);
  return out;
}

/// Original plus one augmented copy per combo for every sample.
/// Each copy draws from its own substream keyed by (seed, position, combo).
inline std::vector<LabeledSample> expand(const std::vector<LabeledSample>& training, const AugmentSpec& spec) {
  spec.validate();
  std::vector<LabeledSample> out;
  out.reserve(training.size() * (1 + spec.combos.size()));
  for (std::size_t i = 0; i < training.size(); ++i) {
    const auto& src = training[i];
    out.push_back(src);
    for (std::size_t j = 0; j < spec.combos.size(); ++j) {
      Rng rng = make_rng(spec.rng_seed, {i, j, spec.combos[j]});
      LabeledSample copy = src;
      copy.frames = apply_combo(src.frames, spec.combos[j], spec, rng);
      out.push_back(std::move(copy));
    }
  }
  return out;
}

}  // namespace spn::augment
