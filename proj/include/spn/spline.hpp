#pragma once

#include <spn/error.hpp>

#include <algorithm>
#include <span>
#include <vector>

namespace spn {

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    require(x_.size() == y_.size(), ErrorCode::ShapeMismatch, "spline x/y size mismatch");
    require(x_.size() >= 2, ErrorCode::InvalidArgument, "spline needs at least two knots");
    for (std::size_t i = 1; i < x_.size(); ++i)
      require(x_[i] > x_[i - 1], ErrorCode::InvalidArgument, "spline knots must be strictly increasing");
    solve_second_derivatives();
  }

  /// Evenly spaced knots at 0, 1, ..., y.size() - 1.
  static CubicSpline uniform(std::span<const double> y) {
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
    return CubicSpline(std::move(x), std::vector<double>(y.begin(), y.end()));
  }

  /// Evaluates the spline; outside the knot span the end segments are extended.
  double operator()(double xq) const {
    const std::size_t n = x_.size();
    std::size_t i;
    if (xq <= x_.front()) {
      i = 0;
    } else if (xq >= x_.back()) {
      i = n - 2;
    } else {
      i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) - 1;
    }
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - xq) / h;
    const double b = (xq - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h) / 6.0;
  }

 private:
  // Tridiagonal system for interior second derivatives, natural ends (m = 0).
  void solve_second_derivatives() {
    const std::size_t n = x_.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      const double sub = h0 / 6.0;
      const double diag = (h0 + h1) / 3.0;
      const double sup = h1 / 6.0;
      const double rhs = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      const double denom = diag - sub * c[i - 1];
      c[i] = sup / denom;
      d[i] = (rhs - sub * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = d[i] - c[i] * m_[i + 1];
      if (i == 1) break;
    }
  }

  std::vector<double> x_, y_, m_;
};

}  // namespace spn
