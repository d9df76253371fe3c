#pragma once

// Layers with hand-derived backward passes. Activations carry a leading
// batch dimension: (B, C, H, W) for images, (B, D) for vectors.

#include <spn/error.hpp>
#include <spn/nn/tensor.hpp>
#include <spn/random.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace spn::nn {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string describe() const = 0;
  /// Per-sample output shape (no batch dimension).
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor<T> forward(Tensor<T> x, bool training) = 0;
  /// Returns d(loss)/d(input) and accumulates parameter gradients.
  virtual Tensor<T> backward(Tensor<T> grad_out) = 0;
  virtual std::vector<Tensor<T>*> params() { return {}; }
  virtual void init(Rng&) {}
};

enum class Padding { Valid, Same };

inline const char* to_string(Padding p) { return p == Padding::Same ? "same" : "valid"; }

/// Uniform He-style initialization: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)).
template <typename T>
void he_uniform(Tensor<T>& w, int fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / fan_in);
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : w.values) v = static_cast<T>(dist(rng));
}

// ---------------------------------------------------------------------------

template <typename T>
class Conv2D final : public Layer<T> {
 public:
  Conv2D(int in_channels, int filters, int kh, int kw, Padding padding = Padding::Valid)
      : in_ch_(in_channels), filters_(filters), kh_(kh), kw_(kw), padding_(padding),
        weight_({filters, in_channels, kh, kw}), bias_({filters}) {
    require(filters >= 1 && in_channels >= 1 && kh >= 1 && kw >= 1, ErrorCode::InvalidArgument,
            "conv dimensions must be positive");
    weight_.enable_grad();
    bias_.enable_grad();
  }

  std::string describe() const override {
    return "Conv2D(" + std::to_string(filters_) + "@" + std::to_string(kh_) + "x" + std::to_string(kw_) + "," +
           to_string(padding_) + ")";
  }

  Shape output_shape(const Shape& in) const override {
    require(in.size() == 3 && in[0] == in_ch_, ErrorCode::ShapeMismatch, "conv input must be (C,H,W)");
    if (padding_ == Padding::Same) return {filters_, in[1], in[2]};
    require(in[1] >= kh_ && in[2] >= kw_, ErrorCode::ShapeMismatch,
            "kernel larger than input " + shape_str(in));
    return {filters_, in[1] - kh_ + 1, in[2] - kw_ + 1};
  }

  std::vector<Tensor<T>*> params() override { return {&weight_, &bias_}; }

  void init(Rng& rng) override {
    he_uniform(weight_, in_ch_ * kh_ * kw_, rng);
    std::fill(bias_.values.begin(), bias_.values.end(), T{});
  }

  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }

  Tensor<T> forward(Tensor<T> x, bool) override {
    require(x.shape.size() == 4, ErrorCode::ShapeMismatch, "conv expects (B,C,H,W)");
    in_shape_ = x.shape;
    const Shape os = output_shape({x.dim(1), x.dim(2), x.dim(3)});
    const int batch = x.dim(0), ho = os[1], wo = os[2];
    const int plane = ho * wo;
    const int ckk = in_ch_ * kh_ * kw_;
    build_columns(x, ho, wo);

    const Eigen::Map<const RowMat<T>> w(weight_.data(), filters_, ckk);
    Tensor<T> y({batch, filters_, ho, wo});
    for (int b = 0; b < batch; ++b) {
      Eigen::Map<RowMat<T>> yb(y.data() + static_cast<std::size_t>(b) * filters_ * plane, filters_, plane);
      yb.noalias() = w * sample_columns(b, plane);
      for (int f = 0; f < filters_; ++f) yb.row(f).array() += bias_[static_cast<std::size_t>(f)];
    }
    return y;
  }

  Tensor<T> backward(Tensor<T> g) override {
    const int batch = g.dim(0), ho = g.dim(2), wo = g.dim(3);
    const int plane = ho * wo;
    const int ckk = in_ch_ * kh_ * kw_;

    const Eigen::Map<const RowMat<T>> w(weight_.data(), filters_, ckk);
    Eigen::Map<RowMat<T>> dw(weight_.grad.data(), filters_, ckk);
    RowMat<T> dcols(ckk, plane);
    Tensor<T> dx(in_shape_);
    const int h = in_shape_[2], wd = in_shape_[3];
    const int pt = pad_top(), pl = pad_left();
    for (int b = 0; b < batch; ++b) {
      const Eigen::Map<const RowMat<T>> gb(g.data() + static_cast<std::size_t>(b) * filters_ * plane, filters_, plane);
      dw.noalias() += gb * sample_columns(b, plane).transpose();
      for (int f = 0; f < filters_; ++f) {
        const T* row = gb.data() + static_cast<std::size_t>(f) * plane;
        bias_.grad[static_cast<std::size_t>(f)] += std::accumulate(row, row + plane, T{});
      }
      dcols.noalias() = w.transpose() * gb;
      for (int c = 0; c < in_ch_; ++c) {
        T* img = dx.data() + (static_cast<std::size_t>(b) * in_ch_ + c) * h * wd;
        for (int i = 0; i < kh_; ++i)
          for (int j = 0; j < kw_; ++j) {
            const T* row = dcols.data() + static_cast<Eigen::Index>((c * kh_ + i) * kw_ + j) * plane;
            const int ox0 = std::max(0, pl - j), ox1 = std::min(wo, wd + pl - j);
            for (int oy = 0; oy < ho; ++oy) {
              const int iy = oy + i - pt;
              if (iy < 0 || iy >= h) continue;
              T* dst = img + iy * wd + (j - pl);
              const T* src = row + oy * wo;
              for (int ox = ox0; ox < ox1; ++ox) dst[ox] += src[ox];
            }
          }
      }
    }
    return dx;
  }

 private:
  int pad_top() const { return padding_ == Padding::Same ? (kh_ - 1) / 2 : 0; }
  int pad_left() const { return padding_ == Padding::Same ? (kw_ - 1) / 2 : 0; }

  // Column matrices, one contiguous (C*kh*kw, Ho*Wo) block per sample.
  Eigen::Map<const RowMat<T>> sample_columns(int b, int plane) const {
    const int ckk = in_ch_ * kh_ * kw_;
    return Eigen::Map<const RowMat<T>>(cols_.data() + static_cast<std::size_t>(b) * ckk * plane, ckk, plane);
  }

  void build_columns(const Tensor<T>& x, int ho, int wo) {
    const int batch = x.dim(0), h = x.dim(2), wd = x.dim(3);
    const int plane = ho * wo;
    const int ckk = in_ch_ * kh_ * kw_;
    const int pt = pad_top(), pl = pad_left();
    cols_.resize(static_cast<std::size_t>(batch) * ckk * plane);
    for (int b = 0; b < batch; ++b)
      for (int c = 0; c < in_ch_; ++c) {
        const T* img = x.data() + (static_cast<std::size_t>(b) * in_ch_ + c) * h * wd;
        for (int i = 0; i < kh_; ++i)
          for (int j = 0; j < kw_; ++j) {
            T* row = cols_.data() + (static_cast<std::size_t>(b) * ckk + (c * kh_ + i) * kw_ + j) * plane;
            const int ox0 = std::max(0, pl - j), ox1 = std::min(wo, wd + pl - j);
            for (int oy = 0; oy < ho; ++oy) {
              const int iy = oy + i - pt;
              T* dst = row + oy * wo;
              if (iy < 0 || iy >= h) {
                std::fill(dst, dst + wo, T{});
                continue;
              }
              const T* src = img + iy * wd + (j - pl);
              std::fill(dst, dst + ox0, T{});
              for (int ox = ox0; ox < ox1; ++ox) dst[ox] = src[ox];
              std::fill(dst + std::max(ox0, ox1), dst + wo, T{});
            }
          }
      }
  }

  int in_ch_, filters_, kh_, kw_;
  Padding padding_;
  Tensor<T> weight_, bias_;
  std::vector<T> cols_;
  Shape in_shape_;
};

// ---------------------------------------------------------------------------

/// Non-overlapping max pooling; trailing rows/columns that do not fill a window are dropped.
template <typename T>
class MaxPool2D final : public Layer<T> {
 public:
  MaxPool2D(int kh, int kw) : kh_(kh), kw_(kw) {
    require(kh >= 1 && kw >= 1, ErrorCode::InvalidArgument, "pool size must be positive");
  }

  std::string describe() const override {
    return "MaxPool2D(" + std::to_string(kh_) + "x" + std::to_string(kw_) + ")";
  }

  Shape output_shape(const Shape& in) const override {
    require(in.size() == 3, ErrorCode::ShapeMismatch, "pool input must be (C,H,W)");
    require(in[1] >= kh_ && in[2] >= kw_, ErrorCode::ShapeMismatch, "pool window larger than input " + shape_str(in));
    return {in[0], in[1] / kh_, in[2] / kw_};
  }

  Tensor<T> forward(Tensor<T> x, bool) override {
    in_shape_ = x.shape;
    const Shape os = output_shape({x.dim(1), x.dim(2), x.dim(3)});
    const int batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor<T> y({batch, os[0], os[1], os[2]});
    argmax_.resize(y.size());
    const int oh = os[1], ow = os[2];
    T* out = y.data();
    std::uint32_t* arg = argmax_.data();
    for (int plane = 0; plane < batch * ch; ++plane) {
      const T* img = x.data() + static_cast<std::size_t>(plane) * h * w;
      const auto base = static_cast<std::uint32_t>(plane * h * w);
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          int best = oy * kh_ * w + ox * kw_;
          T top = img[best];
          for (int i = 0; i < kh_; ++i) {
            const int r = (oy * kh_ + i) * w + ox * kw_;
            for (int j = 0; j < kw_; ++j) {
              const T v = img[r + j];
              const bool gt = v > top;
              top = gt ? v : top;
              best = gt ? r + j : best;
            }
          }
          *out++ = top;
          *arg++ = base + static_cast<std::uint32_t>(best);
        }
    }
    return y;
  }

  Tensor<T> backward(Tensor<T> g) override {
    Tensor<T> dx(in_shape_);
    for (std::size_t o = 0; o < g.size(); ++o) dx[argmax_[o]] += g[o];
    return dx;
  }

 private:
  int kh_, kw_;
  Shape in_shape_;
  std::vector<std::uint32_t> argmax_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(int in_features, int units) : in_(in_features), units_(units), weight_({units, in_features}), bias_({units}) {
    require(in_features >= 1 && units >= 1, ErrorCode::InvalidArgument, "dense dimensions must be positive");
    weight_.enable_grad();
    bias_.enable_grad();
  }

  std::string describe() const override { return "Dense(" + std::to_string(units_) + ")"; }

  Shape output_shape(const Shape& in) const override {
    require(in.size() == 1 && in[0] == in_, ErrorCode::ShapeMismatch,
            "dense expects (" + std::to_string(in_) + ") got " + shape_str(in));
    return {units_};
  }

  std::vector<Tensor<T>*> params() override { return {&weight_, &bias_}; }

  void init(Rng& rng) override {
    he_uniform(weight_, in_, rng);
    std::fill(bias_.values.begin(), bias_.values.end(), T{});
  }

  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }

  Tensor<T> forward(Tensor<T> x, bool) override {
    require(x.shape.size() == 2 && x.dim(1) == in_, ErrorCode::ShapeMismatch,
            "dense input " + shape_str(x.shape) + " does not match " + std::to_string(in_));
    input_ = std::move(x);
    const int batch = input_.dim(0);
    const Eigen::Map<const RowMat<T>> xm(input_.data(), batch, in_);
    const Eigen::Map<const RowMat<T>> w(weight_.data(), units_, in_);
    const Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias_.data(), units_);
    Tensor<T> y({batch, units_});
    Eigen::Map<RowMat<T>> ym(y.data(), batch, units_);
    ym.noalias() = xm * w.transpose();
    ym.rowwise() += b;
    return y;
  }

  Tensor<T> backward(Tensor<T> g) override {
    const int batch = g.dim(0);
    const Eigen::Map<const RowMat<T>> gm(g.data(), batch, units_);
    const Eigen::Map<const RowMat<T>> xm(input_.data(), batch, in_);
    const Eigen::Map<const RowMat<T>> w(weight_.data(), units_, in_);
    Eigen::Map<RowMat<T>> dw(weight_.grad.data(), units_, in_);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(bias_.grad.data(), units_);
    dw.noalias() += gm.transpose() * xm;
    db += gm.colwise().sum();
    Tensor<T> dx({batch, in_});
    Eigen::Map<RowMat<T>> dxm(dx.data(), batch, in_);
    dxm.noalias() = gm * w;
    return dx;
  }

 private:
  int in_, units_;
  Tensor<T> weight_, bias_;
  Tensor<T> input_;
};

// ---------------------------------------------------------------------------

template <typename T>
class ReLU final : public Layer<T> {
 public:
  std::string describe() const override { return "ReLU"; }
  Shape output_shape(const Shape& in) const override { return in; }

  Tensor<T> forward(Tensor<T> x, bool) override {
    active_.resize(x.size());
    T* __restrict p = x.data();
    std::uint8_t* __restrict a = active_.data();
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = p[i] > T{};
      p[i] = std::max(p[i], T{});
    }
    return x;
  }

  Tensor<T> backward(Tensor<T> g) override {
    T* __restrict d = g.data();
    const std::uint8_t* __restrict a = active_.data();
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] ? d[i] : T{};
    return g;
  }

 private:
  std::vector<std::uint8_t> active_;
};

/// Row-wise softmax over (B, D).
template <typename T>
class Softmax final : public Layer<T> {
 public:
  std::string describe() const override { return "Softmax"; }
  Shape output_shape(const Shape& in) const override { return in; }

  Tensor<T> forward(Tensor<T> x, bool) override {
    require(x.shape.size() == 2, ErrorCode::ShapeMismatch, "softmax expects (B,D)");
    const int batch = x.dim(0), d = x.dim(1);
    Tensor<T> y = std::move(x);
    for (int b = 0; b < batch; ++b) {
      T* row = y.data() + static_cast<std::size_t>(b) * d;
      const T mx = *std::max_element(row, row + d);
      T sum{};
      for (int i = 0; i < d; ++i) sum += (row[i] = std::exp(row[i] - mx));
      for (int i = 0; i < d; ++i) row[i] /= sum;
    }
    output_ = y;
    return y;
  }

  Tensor<T> backward(Tensor<T> g) override {
    const int batch = g.dim(0), d = g.dim(1);
    for (int b = 0; b < batch; ++b) {
      const T* p = output_.data() + static_cast<std::size_t>(b) * d;
      T* gr = g.data() + static_cast<std::size_t>(b) * d;
      T dot{};
      for (int i = 0; i < d; ++i) dot += gr[i] * p[i];
      for (int i = 0; i < d; ++i) gr[i] = p[i] * (gr[i] - dot);
    }
    return g;
  }

 private:
  Tensor<T> output_;
};

template <typename T>
class Flatten final : public Layer<T> {
 public:
  std::string describe() const override { return "Flatten"; }
  Shape output_shape(const Shape& in) const override { return {static_cast<int>(shape_size(in))}; }

  Tensor<T> forward(Tensor<T> x, bool) override {
    in_shape_ = x.shape;
    const int batch = x.dim(0);
    x.shape = {batch, static_cast<int>(x.size() / static_cast<std::size_t>(batch))};
    return x;
  }

  Tensor<T> backward(Tensor<T> g) override {
    g.shape = in_shape_;
    return g;
  }

 private:
  Shape in_shape_;
};

// ---------------------------------------------------------------------------

/// Element dropout (per_channel = false) or spatial dropout zeroing whole
/// channels of a (B, C, ...) tensor. Survivors are scaled by 1 / (1 - p);
/// inference is the identity.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(double p, bool per_channel, std::uint64_t seed = 0) : p_(p), per_channel_(per_channel), rng_(seed) {
    require(p >= 0.0 && p < 1.0, ErrorCode::InvalidArgument, "dropout p must be in [0, 1)");
  }

  std::string describe() const override {
    return std::string(per_channel_ ? "SpatialDropout(" : "Dropout(") + std::to_string(p_).substr(0, 4) + ")";
  }
  Shape output_shape(const Shape& in) const override { return in; }

  void init(Rng& rng) override { rng_.seed(rng()); }
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

  /// Reuse the last mask on subsequent training passes (finite-difference checks).
  void freeze_mask(bool frozen) { frozen_ = frozen; }

  Tensor<T> forward(Tensor<T> x, bool training) override {
    training_ = training && p_ > 0.0;
    if (!training_) return x;
    group_ = per_channel_ ? shape_size(Shape(x.shape.begin() + 2, x.shape.end())) : 1;
    const std::size_t groups = x.size() / group_;
    if (!frozen_ || mask_.size() != groups) {
      std::bernoulli_distribution keep(1.0 - p_);
      const T scale = static_cast<T>(1.0 / (1.0 - p_));
      mask_.resize(groups);
      for (auto& m : mask_) m = keep(rng_) ? scale : T{};
    }
    apply_mask(x);
    return x;
  }

  Tensor<T> backward(Tensor<T> g) override {
    if (training_) apply_mask(g);
    return g;
  }

 private:
  double p_;
  bool per_channel_;
  Rng rng_;
  bool frozen_ = false;
  bool training_ = false;
  std::size_t group_ = 1;
  std::vector<T> mask_;  // one factor per element or per channel

  void apply_mask(Tensor<T>& t) const {
    for (std::size_t k = 0; k < mask_.size(); ++k) {
      T* p = t.data() + k * group_;
      const T m = mask_[k];
      for (std::size_t i = 0; i < group_; ++i) p[i] *= m;
    }
  }
};

// ---------------------------------------------------------------------------

/// Joins (B, a) and (B, b) into (B, a + b).
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts) {
  require(!parts.empty(), ErrorCode::ShapeMismatch, "concat of nothing");
  const int batch = parts.front().dim(0);
  int total = 0;
  for (const auto& p : parts) {
    require(p.shape.size() == 2 && p.dim(0) == batch, ErrorCode::ShapeMismatch, "concat expects (B,D) parts");
    total += p.dim(1);
  }
  Tensor<T> out({batch, total});
  for (int b = 0; b < batch; ++b) {
    std::size_t at = static_cast<std::size_t>(b) * total;
    for (const auto& p : parts) {
      const auto d = static_cast<std::size_t>(p.dim(1));
      std::copy_n(p.data() + static_cast<std::size_t>(b) * d, d, out.data() + at);
      at += d;
    }
  }
  return out;
}

/// Inverse of concat: splits (B, sum(widths)) by column widths.
template <typename T>
std::vector<Tensor<T>> split(const Tensor<T>& x, const std::vector<int>& widths) {
  const int batch = x.dim(0);
  int total = 0;
  for (int w : widths) total += w;
  require(x.shape.size() == 2 && x.dim(1) == total, ErrorCode::ShapeMismatch, "split widths do not match");
  std::vector<Tensor<T>> out;
  int offset = 0;
  for (int w : widths) {
    Tensor<T> part({batch, w});
    for (int b = 0; b < batch; ++b)
      std::copy_n(x.data() + static_cast<std::size_t>(b) * total + offset, w, part.data() + static_cast<std::size_t>(b) * w);
    out.push_back(std::move(part));
    offset += w;
  }
  return out;
}

}  // namespace spn::nn
