#include <spn/dsp.hpp>
#include <spn/features.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

namespace spn::dsp {
namespace {

using test::error_code_of;

Matrix naive_dc(const Matrix& r) {
  Matrix out(r.rows(), r.cols());
  for (Eigen::Index m = 0; m < r.rows(); ++m) {
    double s = 0.0;
    for (Eigen::Index n = 0; n < r.cols(); ++n) s += r(m, n);
    for (Eigen::Index n = 0; n < r.cols(); ++n) out(m, n) = r(m, n) - s / static_cast<double>(r.cols());
  }
  return out;
}

Matrix naive_background(const Matrix& r) {
  Matrix out(r.rows(), r.cols());
  for (Eigen::Index n = 0; n < r.cols(); ++n) {
    double s = 0.0;
    for (Eigen::Index m = 0; m < r.rows(); ++m) s += r(m, n);
    for (Eigen::Index m = 0; m < r.rows(); ++m) out(m, n) = r(m, n) - s / static_cast<double>(r.rows());
  }
  return out;
}

RangeWindow brute_force_window(const Matrix& yd, int ws) {
  RangeWindow best{0, ws - 1};
  double best_e = -1.0;
  for (int i = 0; i + ws <= yd.rows(); ++i) {
    double e = 0.0;
    for (int m = i; m < i + ws; ++m)
      for (Eigen::Index n = 0; n < yd.cols(); ++n) e += yd(m, n) * yd(m, n);
    if (e > best_e) {
      best_e = e;
      best = {i, i + ws - 1};
    }
  }
  return best;
}

double window_energy(const Matrix& yd, RangeWindow w) { return crop(yd, w).squaredNorm(); }

TEST(DcSuppress, RowMeanRemoved) {
  EXPECT_EQ(dc_suppress(from_rows({{1, 2, 3}})), from_rows({{-1, 0, 1}}));
}

TEST(DcSuppress, ConstantGoesToZero) {
  EXPECT_TRUE(dc_suppress(Matrix::Constant(4, 6, 3.5)).isZero(0.0));
}

TEST(DcSuppress, MatchesOracle) {
  Rng rng(1);
  const Matrix r = test::random_matrix(5, 7, rng);
  EXPECT_LE((dc_suppress(r) - naive_dc(r)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(BackgroundSuppress, ColumnMeanRemoved) {
  EXPECT_EQ(background_suppress(from_rows({{1}, {2}, {3}})), from_rows({{-1}, {0}, {1}}));
}

TEST(BackgroundSuppress, IdenticalRowsCancel) {
  Matrix m(5, 4);
  m.rowwise() = Eigen::RowVector4d(1.0, -2.0, 7.0, 0.5);
  EXPECT_TRUE(background_suppress(m).isZero(1e-12));
}

TEST(BackgroundSuppress, MatchesOracle) {
  Rng rng(2);
  const Matrix r = test::random_matrix(6, 4, rng);
  EXPECT_LE((background_suppress(r) - naive_background(r)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Suppression, MeansVanishOnLargeInputs) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix r = test::random_matrix(180, 160, rng, -1e3, 1e3);
    const Matrix rbar = dc_suppress(r);
    EXPECT_LE(rbar.rowwise().mean().cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LE(background_suppress(rbar).colwise().mean().cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Suppression, Linear) {
  Rng rng(4);
  const Matrix x = test::random_matrix(8, 9, rng), y = test::random_matrix(8, 9, rng);
  const double a = 1.7, b = -0.3;
  EXPECT_LE((dc_suppress(a * x + b * y) - (a * dc_suppress(x) + b * dc_suppress(y))).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((background_suppress(a * x + b * y) - (a * background_suppress(x) + b * background_suppress(y)))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(TimeDifference, Examples) {
  EXPECT_EQ(time_difference(from_rows({{1, 3, 6}})), from_rows({{2, 3}}));
  EXPECT_EQ(time_difference(from_rows({{0, 2, 4, 6}})), from_rows({{2, 2, 2}}));
  Matrix still(3, 5);
  still.colwise() = Eigen::Vector3d(1, 2, 3);
  EXPECT_TRUE(time_difference(still).isZero(0.0));
}

TEST(TimeDifference, ShapeAndMinimumLength) {
  EXPECT_EQ(time_difference(Matrix::Zero(4, 10)).cols(), 9);
  EXPECT_EQ(error_code_of([] { time_difference(Matrix::Zero(4, 1)); }), ErrorCode::InvalidArgument);
}

TEST(SelectRangeWindow, TieGoesToSmallestStart) {
  Matrix yd = Matrix::Zero(5, 3);
  yd.row(3).setConstant(9.0);
  EXPECT_EQ(select_range_window(yd, 2), (RangeWindow{2, 3}));
}

TEST(SelectRangeWindow, ConcentratedEnergy) {
  Rng rng(5);
  Matrix yd = Matrix::Zero(180, 159);
  yd.middleRows(10, 40) = test::random_matrix(40, 159, rng, 0.5, 1.0);
  EXPECT_EQ(select_range_window(yd, 40), (RangeWindow{10, 49}));
}

TEST(SelectRangeWindow, FullWidth) {
  Rng rng(6);
  const Matrix yd = test::random_matrix(12, 5, rng);
  EXPECT_EQ(select_range_window(yd, 12), (RangeWindow{0, 11}));
}

TEST(SelectRangeWindow, TooWideRejected) {
  EXPECT_EQ(error_code_of([] { select_range_window(Matrix::Ones(5, 3), 6); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_code_of([] { select_range_window(Matrix::Ones(5, 3), 0); }), ErrorCode::InvalidArgument);
}

TEST(SelectRangeWindow, MatchesExhaustiveSearch) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix yd = test::random_matrix(20, 15, rng);
    for (int ws = 1; ws <= 20; ++ws) ASSERT_EQ(select_range_window(yd, ws), brute_force_window(yd, ws));
  }
}

TEST(SelectRangeWindow, OptimalEnergyGrowsWithWidth) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix yd = test::random_matrix(20, 15, rng);
    for (int ws = 1; ws < 20; ++ws)
      EXPECT_GE(window_energy(yd, select_range_window(yd, ws + 1)), window_energy(yd, select_range_window(yd, ws)));
  }
}

TEST(Crop, Examples) {
  Rng rng(9);
  const Matrix y = test::random_matrix(5, 4, rng);
  EXPECT_EQ(crop(y, {0, 4}), y);
  const Matrix c = crop(y, {2, 3});
  ASSERT_EQ(c.rows(), 2);
  EXPECT_EQ(c.row(0), y.row(2));
  EXPECT_EQ(c.row(1), y.row(3));
  EXPECT_EQ(crop(c, {0, 1}), c);
}

TEST(Crop, OutOfBounds) {
  EXPECT_EQ(error_code_of([] { crop(Matrix::Ones(5, 2), {3, 5}); }), ErrorCode::OutOfRange);
  EXPECT_EQ(error_code_of([] { crop(Matrix::Ones(5, 2), {3, 2}); }), ErrorCode::OutOfRange);
}

TEST(Preprocess, CropsSelectedWindow) {
  Rng rng(10);
  Matrix r = test::random_matrix(60, 40, rng, -0.01, 0.01);
  for (int n = 0; n < 40; ++n) r(30, n) += (n % 2 ? 1.0 : -1.0);
  const auto pp = preprocess(r, 10);
  EXPECT_EQ(pp.cropped.rows(), 10);
  EXPECT_EQ(pp.cropped.cols(), 40);
  EXPECT_LE(pp.window.start, 30);
  EXPECT_GE(pp.window.end, 30);
}

TEST(Standardize, ZeroMeanUnitVariance) {
  Rng rng(11);
  const auto v = standardize(test::random_matrix(7, 9, rng, 3.0, 8.0));
  double mean = 0.0, sq = 0.0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (float x : v) sq += (x - mean) * (x - mean);
  EXPECT_NEAR(mean, 0.0, 1e-6);
  EXPECT_NEAR(sq / static_cast<double>(v.size()), 1.0, 1e-5);
  for (float x : standardize(Matrix::Constant(2, 2, 4.0))) EXPECT_EQ(x, 0.0f);
}

}  // namespace
}  // namespace spn::dsp
