#pragma once

// TD-CNN, WRTFT-CNN and the two-branch SPN. A Network holds one convolutional
// branch per input view, concatenates their flattened outputs and runs a
// dense head ending in softmax.

#include <spn/error.hpp>
#include <spn/nn/layers.hpp>
#include <spn/nn/tensor.hpp>
#include <spn/random.hpp>

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace spn::nn {

enum class Architecture { TdCnn, WrtftCnn, Spn };

inline std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::TdCnn: return "TD_CNN";
    case Architecture::WrtftCnn: return "WRTFT_CNN";
    case Architecture::Spn: return "SPN";
  }
  return "?";
}

inline Architecture parse_architecture(const std::string& s) {
  if (s == "TD_CNN" || s == "td") return Architecture::TdCnn;
  if (s == "WRTFT_CNN" || s == "wrtft") return Architecture::WrtftCnn;
  if (s == "SPN" || s == "spn") return Architecture::Spn;
  fail(ErrorCode::InvalidArgument, "unknown architecture '" + s + "'");
}

/// Which views a network consumes, in branch order.
inline bool uses_td(Architecture a) { return a != Architecture::WrtftCnn; }
inline bool uses_wrtft(Architecture a) { return a != Architecture::TdCnn; }

struct ModelSpec {
  Architecture architecture = Architecture::Spn;
  int num_classes = 4;
  Shape td_input_shape = {40, 159};
  Shape wrtft_input_shape = {33, 33};
  std::vector<int> td_head_units = {64};
  std::vector<int> wrtft_head_units = {20, 10};
  std::vector<int> fusion_units = {128, 64};
  double spatial_dropout = 0.3;
  double dropout = 0.5;
  Padding td_padding = Padding::Same;
  Padding wrtft_padding = Padding::Valid;
  std::uint64_t seed = 0;

  void validate() const {
    require(num_classes == 4 || num_classes == 5, ErrorCode::InvalidArgument, "num_classes must be 4 or 5");
    if (uses_td(architecture))
      require(td_input_shape.size() == 2 && td_input_shape[0] > 0 && td_input_shape[1] > 0,
              ErrorCode::InvalidArgument, "TD input shape must be (rows, cols)");
    if (uses_wrtft(architecture))
      require(wrtft_input_shape.size() == 2 && wrtft_input_shape[0] > 0 && wrtft_input_shape[1] > 0,
              ErrorCode::InvalidArgument, "WRTFT input shape must be (rows, cols)");
  }

  bool operator==(const ModelSpec&) const = default;
};

inline nlohmann::json to_json(const ModelSpec& s) {
  return {{"architecture", to_string(s.architecture)},
          {"num_classes", s.num_classes},
          {"td_input_shape", s.td_input_shape},
          {"wrtft_input_shape", s.wrtft_input_shape},
          {"td_head_units", s.td_head_units},
          {"wrtft_head_units", s.wrtft_head_units},
          {"fusion_units", s.fusion_units},
          {"spatial_dropout", s.spatial_dropout},
          {"dropout", s.dropout},
          {"td_padding", to_string(s.td_padding)},
          {"wrtft_padding", to_string(s.wrtft_padding)},
          {"seed", s.seed}};
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  try {
    s.architecture = parse_architecture(j.at("architecture").get<std::string>());
    s.num_classes = j.at("num_classes").get<int>();
    s.td_input_shape = j.at("td_input_shape").get<Shape>();
    s.wrtft_input_shape = j.at("wrtft_input_shape").get<Shape>();
    s.td_head_units = j.value("td_head_units", s.td_head_units);
    s.wrtft_head_units = j.value("wrtft_head_units", s.wrtft_head_units);
    s.fusion_units = j.value("fusion_units", s.fusion_units);
    s.spatial_dropout = j.value("spatial_dropout", s.spatial_dropout);
    s.dropout = j.value("dropout", s.dropout);
    s.td_padding = j.value("td_padding", std::string("same")) == "same" ? Padding::Same : Padding::Valid;
    s.wrtft_padding = j.value("wrtft_padding", std::string("valid")) == "same" ? Padding::Same : Padding::Valid;
    s.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::BadFormat, std::string("model spec: ") + ex.what());
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------

template <typename T>
class Sequential {
 public:
  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<T> forward(Tensor<T> x, bool training) {
    for (auto& l : layers_) x = l->forward(std::move(x), training);
    return x;
  }

  /// Backward through layers [0, end).
  Tensor<T> backward(Tensor<T> g, std::size_t end) {
    for (std::size_t i = end; i-- > 0;) g = layers_[i]->backward(std::move(g));
    return g;
  }
  Tensor<T> backward(Tensor<T> g) { return backward(std::move(g), layers_.size()); }

  Shape output_shape(Shape in) const {
    for (const auto& l : layers_) in = l->output_shape(in);
    return in;
  }

  std::vector<Tensor<T>*> params() {
    std::vector<Tensor<T>*> out;
    for (auto& l : layers_)
      for (auto* p : l->params()) out.push_back(p);
    return out;
  }

  std::size_t size() const { return layers_.size(); }
  Layer<T>& operator[](std::size_t i) { return *layers_[i]; }
  const Layer<T>& operator[](std::size_t i) const { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

template <typename T>
class Network {
 public:
  explicit Network(ModelSpec spec) : spec_(std::move(spec)) {}

  const ModelSpec& spec() const { return spec_; }
  std::vector<Sequential<T>>& branches() { return branches_; }
  Sequential<T>& head() { return head_; }

  /// Per-sample input shapes, one per branch: (1, rows, cols).
  const std::vector<Shape>& input_shapes() const { return input_shapes_; }
  int num_classes() const { return spec_.num_classes; }

  /// `inputs[i]` is a (B, 1, rows, cols) batch for branch i. Returns (B, C) probabilities.
  Tensor<T> forward(const std::vector<Tensor<T>>& inputs, bool training) {
    require(inputs.size() == branches_.size(), ErrorCode::ShapeMismatch, "one input per branch required");
    std::vector<Tensor<T>> feats;
    feats.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      require(inputs[i].shape.size() == 4 &&
                  Shape(inputs[i].shape.begin() + 1, inputs[i].shape.end()) == input_shapes_[i],
              ErrorCode::ShapeMismatch,
              "branch " + std::to_string(i) + " input " + shape_str(inputs[i].shape) + " expected (B)" +
                  shape_str(input_shapes_[i]));
      feats.push_back(branches_[i].forward(inputs[i], training));
    }
    Tensor<T> fused = feats.size() == 1 ? std::move(feats.front()) : concat(feats);
    return head_.forward(std::move(fused), training);
  }

  /// Backward from d(loss)/d(probabilities).
  void backward(const Tensor<T>& grad_probs) { backward_from(head_.backward(grad_probs)); }

  /// Backward from d(loss)/d(logits), skipping the final softmax.
  void backward_logits(const Tensor<T>& grad_logits) {
    backward_from(head_.backward(grad_logits, head_.size() - 1));
  }

  std::vector<Tensor<T>*> params() {
    std::vector<Tensor<T>*> out;
    for (auto& b : branches_)
      for (auto* p : b.params()) out.push_back(p);
    for (auto* p : head_.params()) out.push_back(p);
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += p->size();
    return n;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }

  /// Flat copy of every parameter in declaration order.
  std::vector<T> get_weights() {
    std::vector<T> out;
    for (auto* p : params()) out.insert(out.end(), p->values.begin(), p->values.end());
    return out;
  }

  void set_weights(const std::vector<T>& w) {
    require(w.size() == parameter_count(), ErrorCode::ShapeMismatch, "weight blob size mismatch");
    std::size_t at = 0;
    for (auto* p : params()) {
      std::copy_n(w.begin() + static_cast<std::ptrdiff_t>(at), p->size(), p->values.begin());
      at += p->size();
    }
  }

  /// Flattened width of each branch output.
  std::vector<int> branch_widths() const {
    std::vector<int> w;
    for (std::size_t i = 0; i < branches_.size(); ++i) w.push_back(branches_[i].output_shape(input_shapes_[i])[0]);
    return w;
  }

  std::string summary() const {
    std::string s = to_string(spec_.architecture) + "\n";
    for (std::size_t i = 0; i < branches_.size(); ++i) {
      Shape shape = input_shapes_[i];
      s += "  branch " + std::to_string(i) + " input " + shape_str(shape) + "\n";
      for (std::size_t k = 0; k < branches_[i].size(); ++k) {
        shape = branches_[i][k].output_shape(shape);
        s += "    " + branches_[i][k].describe() + " -> " + shape_str(shape) + "\n";
      }
    }
    int width = 0;
    for (int w : branch_widths()) width += w;
    Shape shape{width};
    s += "  head input " + shape_str(shape) + "\n";
    for (std::size_t k = 0; k < head_.size(); ++k) {
      shape = head_[k].output_shape(shape);
      s += "    " + head_[k].describe() + " -> " + shape_str(shape) + "\n";
    }
    return s;
  }

 private:
  void backward_from(const Tensor<T>& g_fused) {
    if (branches_.size() == 1) {
      branches_.front().backward(g_fused);
      return;
    }
    auto parts = split(g_fused, branch_widths());
    for (std::size_t i = 0; i < branches_.size(); ++i) branches_[i].backward(parts[i]);
  }

  template <typename U>
  friend Network<U> build_model(const ModelSpec& spec);

  ModelSpec spec_;
  std::vector<Sequential<T>> branches_;
  std::vector<Shape> input_shapes_;
  Sequential<T> head_;
};

namespace detail {

template <typename T>
void add_conv_block(Sequential<T>& seq, Shape& shape, int filters, int kh, int kw, Padding pad, int pool_h,
                    int pool_w, double spatial_p) {
  seq.template add<Conv2D<T>>(shape[0], filters, kh, kw, pad);
  shape = seq[seq.size() - 1].output_shape(shape);
  seq.template add<ReLU<T>>();
  if (spatial_p > 0.0) seq.template add<Dropout<T>>(spatial_p, true);
  seq.template add<MaxPool2D<T>>(pool_h, pool_w);
  shape = seq[seq.size() - 1].output_shape(shape);
}

template <typename T>
Shape td_branch(Sequential<T>& seq, const ModelSpec& spec) {
  Shape shape{1, spec.td_input_shape[0], spec.td_input_shape[1]};
  for (int filters : {16, 32, 32})
    add_conv_block(seq, shape, filters, 2, 3, spec.td_padding, 2, 3, spec.spatial_dropout);
  seq.template add<Flatten<T>>();
  return {static_cast<int>(shape_size(shape))};
}

template <typename T>
Shape wrtft_branch(Sequential<T>& seq, const ModelSpec& spec) {
  Shape shape{1, spec.wrtft_input_shape[0], spec.wrtft_input_shape[1]};
  for (int filters : {10, 20})
    add_conv_block(seq, shape, filters, 2, 2, spec.wrtft_padding, 2, 2, spec.spatial_dropout);
  seq.template add<Flatten<T>>();
  return {static_cast<int>(shape_size(shape))};
}

}  // namespace detail

/// Builds and initializes (He-uniform weights, seeded dropout streams) a network.
///   TD branch:    [Conv k@2x3, ReLU, SpatialDropout, MaxPool 2x3] for k = 16, 32, 32
///   WRTFT branch: [Conv k@2x2, ReLU, SpatialDropout, MaxPool 2x2] for k = 10, 20
///   TD_CNN head:    Dense 64 ReLU, Dropout, Dense C, Softmax
///   WRTFT_CNN head: Dense 20 ReLU, Dense 10 ReLU, Dropout, Dense C, Softmax
///   SPN head:       Dense 128 ReLU, Dropout, Dense 64 ReLU, Dense C, Softmax
template <typename T>
Network<T> build_model(const ModelSpec& spec) {
  spec.validate();
  Network<T> net(spec);
  int width = 0;
  if (uses_td(spec.architecture)) {
    auto& seq = net.branches_.emplace_back();
    width += detail::td_branch(seq, spec)[0];
    net.input_shapes_.push_back({1, spec.td_input_shape[0], spec.td_input_shape[1]});
  }
  if (uses_wrtft(spec.architecture)) {
    auto& seq = net.branches_.emplace_back();
    width += detail::wrtft_branch(seq, spec)[0];
    net.input_shapes_.push_back({1, spec.wrtft_input_shape[0], spec.wrtft_input_shape[1]});
  }

  auto& head = net.head_;
  int in = width;
  auto dense_relu = [&](int units) {
    head.template add<Dense<T>>(in, units);
    head.template add<ReLU<T>>();
    in = units;
  };
  auto dropout = [&] {
    if (spec.dropout > 0.0) head.template add<Dropout<T>>(spec.dropout, false);
  };
  switch (spec.architecture) {
    case Architecture::TdCnn:
      for (int u : spec.td_head_units) dense_relu(u);
      dropout();
      break;
    case Architecture::WrtftCnn:
      for (int u : spec.wrtft_head_units) dense_relu(u);
      dropout();
      break;
    case Architecture::Spn:
      for (std::size_t i = 0; i < spec.fusion_units.size(); ++i) {
        dense_relu(spec.fusion_units[i]);
        if (i == 0) dropout();
      }
      break;
  }
  head.template add<Dense<T>>(in, spec.num_classes);
  head.template add<Softmax<T>>();

  std::uint64_t index = 0;
  auto init_all = [&](Sequential<T>& seq) {
    for (std::size_t k = 0; k < seq.size(); ++k) {
      Rng rng = make_rng(spec.seed, {0x1a7e, index++});
      seq[k].init(rng);
    }
  };
  for (auto& b : net.branches_) init_all(b);
  init_all(head);
  return net;
}

}  // namespace spn::nn
