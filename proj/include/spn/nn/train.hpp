#pragma once

// Mini-batch Adam training with early stopping on validation loss.

#include <spn/error.hpp>
#include <spn/features.hpp>
#include <spn/nn/adam.hpp>
#include <spn/nn/loss.hpp>
#include <spn/nn/model.hpp>
#include <spn/random.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace spn::nn {

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 16;
  int max_epochs = 300;
  int patience = 20;
  std::uint64_t seed = 0;

  void validate() const {
    require(lr > 0.0 && batch_size > 0 && max_epochs > 0 && patience >= 0, ErrorCode::InvalidArgument,
            "training config values must be positive");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

/// CSV `epoch,train_loss,val_loss,val_acc`.
inline void write_history_csv(std::ostream& os, const TrainHistory& h) {
  os << "epoch,train_loss,val_loss,val_acc\n";
  char line[128];
  for (const auto& e : h.epochs) {
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f\n", e.epoch, e.train_loss, e.val_loss, e.val_acc);
    os << line;
  }
}

/// Stacks the views a network needs for `idx` into (B, 1, rows, cols) tensors.
template <typename T>
std::vector<Tensor<T>> make_batch(const Network<T>& net, const std::vector<Example>& data,
                                  std::span<const std::size_t> idx) {
  const auto arch = net.spec().architecture;
  std::vector<Tensor<T>> out;
  const auto batch = static_cast<int>(idx.size());
  std::size_t branch = 0;
  auto stack = [&](auto member) {
    const Shape& s = net.input_shapes()[branch++];
    Tensor<T> t({batch, s[0], s[1], s[2]});
    const std::size_t per = shape_size(s);
    for (int b = 0; b < batch; ++b) {
      const auto& v = data[idx[static_cast<std::size_t>(b)]].*member;
      require(v.size() == per, ErrorCode::ShapeMismatch,
              "example view has " + std::to_string(v.size()) + " values, network expects " + std::to_string(per));
      std::transform(v.begin(), v.end(), t.data() + static_cast<std::size_t>(b) * per,
                     [](float x) { return static_cast<T>(x); });
    }
    out.push_back(std::move(t));
  };
  if (uses_td(arch)) stack(&Example::td);
  if (uses_wrtft(arch)) stack(&Example::wrtft);
  return out;
}

template <typename T>
std::vector<int> batch_labels(const std::vector<Example>& data, std::span<const std::size_t> idx) {
  std::vector<int> y;
  y.reserve(idx.size());
  for (auto i : idx) y.push_back(data[i].label);
  return y;
}

inline int argmax_row(const float* p, int n) { return static_cast<int>(std::max_element(p, p + n) - p); }
inline int argmax_row(const double* p, int n) { return static_cast<int>(std::max_element(p, p + n) - p); }

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;  // fraction in [0, 1]
  std::vector<int> predictions;
};

/// Inference-mode loss, accuracy and argmax predictions.
template <typename T>
Evaluation evaluate(Network<T>& net, const std::vector<Example>& data, int batch_size = 64) {
  require(!data.empty(), ErrorCode::InsufficientData, "evaluate on empty set");
  Evaluation ev;
  ev.predictions.reserve(data.size());
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  double loss_sum = 0.0;
  std::size_t correct = 0;
  const int classes = net.num_classes();
  for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(batch_size), idx.size() - start);
    std::span<const std::size_t> sel(idx.data() + start, n);
    const auto probs = net.forward(make_batch(net, data, sel), false);
    const auto labels = batch_labels<T>(data, sel);
    loss_sum += cross_entropy(one_hot<T>(labels, classes), probs).loss * static_cast<double>(n);
    for (std::size_t b = 0; b < n; ++b) {
      const int pred = argmax_row(probs.data() + b * static_cast<std::size_t>(classes), classes);
      ev.predictions.push_back(pred);
      correct += pred == labels[b] ? 1u : 0u;
    }
  }
  ev.loss = loss_sum / static_cast<double>(data.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return ev;
}

/// One Adam step on a batch; returns the batch loss (training mode).
template <typename T>
double train_step(Network<T>& net, const std::vector<Example>& data, std::span<const std::size_t> sel,
                  AdamState<T>& state, const AdamConfig& adam) {
  const auto probs = net.forward(make_batch(net, data, sel), true);
  const auto y = one_hot<T>(batch_labels<T>(data, sel), net.num_classes());
  const double loss = cross_entropy(y, probs).loss;
  net.zero_grad();
  net.backward_logits(softmax_cross_entropy_logit_grad(y, probs));
  adam_step(net.params(), state, adam);
  return loss;
}

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Shuffled mini-batch Adam; stops once validation loss has not improved for
/// more than `patience` epochs and restores the best-validation weights.
template <typename T>
TrainHistory train(Network<T>& net, const std::vector<Example>& train_set, const std::vector<Example>& val_set,
                   const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  require(!train_set.empty() && !val_set.empty(), ErrorCode::InsufficientData, "train and validation sets must be non-empty");

  Rng shuffle_rng = make_rng(cfg.seed, {0x5417});
  AdamState<T> state;
  AdamConfig adam;
  adam.lr = cfg.lr;

  TrainHistory history;
  std::vector<T> best_weights = net.get_weights();
  int since_best = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      loss_sum += train_step(net, train_set, std::span<const std::size_t>(order.data() + start, n), state, adam) *
                  static_cast<double>(n);
    }
    const auto val = evaluate(net, val_set);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), val.loss, val.accuracy};
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (val.loss < history.best_val_loss) {
      history.best_val_loss = val.loss;
      history.best_epoch = epoch;
      best_weights = net.get_weights();
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      break;
    }
  }
  net.set_weights(best_weights);
  return history;
}

}  // namespace spn::nn
