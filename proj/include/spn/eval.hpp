#pragma once

// Experiment protocols, the multi-run harness and accuracy/confusion summaries.

#include <spn/augment.hpp>
#include <spn/dataformat.hpp>
#include <spn/error.hpp>
#include <spn/features.hpp>
#include <spn/nn/model.hpp>
#include <spn/nn/train.hpp>
#include <spn/random.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace spn::eval {

enum class Protocol { UnseenRandomSplit, SeenKFold, WindowSweep, LeaveOneParticipantOut, SeenKFold6 };

inline std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::UnseenRandomSplit: return "unseen";
    case Protocol::SeenKFold: return "seen5";
    case Protocol::WindowSweep: return "sweep";
    case Protocol::LeaveOneParticipantOut: return "lopo";
    case Protocol::SeenKFold6: return "seen6";
  }
  return "?";
}

inline Protocol parse_protocol(const std::string& s) {
  for (auto p : {Protocol::UnseenRandomSplit, Protocol::SeenKFold, Protocol::WindowSweep,
                 Protocol::LeaveOneParticipantOut, Protocol::SeenKFold6})
    if (to_string(p) == s) return p;
  fail(ErrorCode::InvalidArgument, "unknown protocol '" + s + "' (expected unseen, seen5, sweep, lopo or seen6)");
}

/// A model kind with or without training-set augmentation, e.g. "spn+aug".
struct Method {
  nn::Architecture architecture = nn::Architecture::Spn;
  bool augmented = false;

  std::string name() const {
    std::string base = architecture == nn::Architecture::Spn     ? "spn"
                       : architecture == nn::Architecture::TdCnn ? "td"
                                                                 : "wrtft";
    return augmented ? base + "+aug" : base;
  }
  bool operator==(const Method&) const = default;
};

inline Method parse_method(const std::string& s) {
  const auto plus = s.find('+');
  Method m;
  m.architecture = nn::parse_architecture(s.substr(0, plus));
  if (plus != std::string::npos) {
    require(s.substr(plus) == "+aug", ErrorCode::InvalidArgument, "unknown method suffix in '" + s + "'");
    m.augmented = true;
  }
  return m;
}

inline std::vector<Method> parse_methods(const std::string& csv) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto comma = std::min(csv.find(',', start), csv.size());
    const std::string item = csv.substr(start, comma - start);
    if (!item.empty()) out.push_back(parse_method(item));
    start = comma + 1;
  }
  require(!out.empty(), ErrorCode::InvalidArgument, "no methods given");
  return out;
}

inline std::vector<Method> all_methods() {
  return {{nn::Architecture::Spn, true},      {nn::Architecture::TdCnn, true}, {nn::Architecture::WrtftCnn, true},
          {nn::Architecture::Spn, false},     {nn::Architecture::TdCnn, false}, {nn::Architecture::WrtftCnn, false}};
}

struct ExperimentSpec {
  Protocol protocol = Protocol::UnseenRandomSplit;
  int train_participants = 18;
  int val_participants = 4;
  int test_participants = 4;
  int repeats = 10;
  std::vector<int> ws_list = {30, 35, 40, 45, 50, 55, 60};
  /// Evaluate only the first n splits (all when unset).
  std::optional<int> max_splits;
  std::vector<Method> methods = all_methods();
  int runs_per_config = 5;
  ClassMode class_mode = ClassMode::Four;
  /// Keep only samples from this session before splitting.
  std::optional<int> session_filter;
  FeatureConfig features;
  augment::AugmentSpec augment;
  nn::TrainConfig train;
  std::uint64_t seed = 0;
  int jobs = 1;

  int folds() const { return protocol == Protocol::SeenKFold6 ? 6 : 5; }

  /// Window sizes evaluated: the sweep list, or the single feature WS otherwise.
  std::vector<int> window_sizes() const {
    return protocol == Protocol::WindowSweep ? ws_list : std::vector<int>{features.ws};
  }

  void validate() const {
    require(train_participants >= 1 && val_participants >= 1 && test_participants >= 1, ErrorCode::InvalidArgument,
            "split participant counts must be positive");
    require(repeats >= 1, ErrorCode::InvalidArgument, "repeats must be >= 1");
    require(runs_per_config >= 1, ErrorCode::InvalidArgument, "runs_per_config must be >= 1");
    require(!methods.empty(), ErrorCode::InvalidArgument, "at least one method required");
    require(!max_splits || *max_splits >= 1, ErrorCode::InvalidArgument, "max_splits must be >= 1");
    require(jobs >= 1, ErrorCode::InvalidArgument, "jobs must be >= 1");
    require(!session_filter || *session_filter == 1 || *session_filter == 2, ErrorCode::InvalidArgument,
            "session filter must be 1 or 2");
    for (int ws : window_sizes()) require(ws >= 1, ErrorCode::InvalidArgument, "window sizes must be positive");
    features.stft.validate();
    augment.validate();
    train.validate();
  }
};

// ---------------------------------------------------------------------------
// Splits

struct ParticipantSplit {
  std::vector<int> train, val, test;
};

/// Sample indices into the dataset for one fold or partition.
struct Split {
  std::vector<std::size_t> train, val, test;
};

/// Sorted distinct participant ids.
inline std::vector<int> participants_of(const std::vector<LabeledSample>& data) {
  std::set<int> ids;
  for (const auto& s : data) ids.insert(s.participant_id);
  return {ids.begin(), ids.end()};
}

/// Seeded random train/val/test partitions of participants. Participants
/// beyond the three counts join the training set.
inline std::vector<ParticipantSplit> unseen_partitions(std::vector<int> participants, int n_train, int n_val, int n_test,
                                                       int repeats, std::uint64_t seed) {
  std::sort(participants.begin(), participants.end());
  const auto n = static_cast<int>(participants.size());
  require(n_train + n_val + n_test <= n, ErrorCode::InsufficientData,
          "need " + std::to_string(n_train + n_val + n_test) + " participants, have " + std::to_string(n));
  std::vector<ParticipantSplit> out;
  for (int r = 0; r < repeats; ++r) {
    Rng rng = make_rng(seed, {0x5b17, static_cast<std::uint64_t>(r)});
    std::vector<int> p = participants;
    std::shuffle(p.begin(), p.end(), rng);
    ParticipantSplit s;
    s.val.assign(p.begin(), p.begin() + n_val);
    s.test.assign(p.begin() + n_val, p.begin() + n_val + n_test);
    s.train.assign(p.begin() + n_val + n_test, p.end());
    for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
    out.push_back(std::move(s));
  }
  return out;
}

/// One fold per participant: that participant is the test set, the next one
/// (cyclically, in sorted order) is validation, the rest train.
inline std::vector<ParticipantSplit> lopo_partitions(std::vector<int> participants) {
  std::sort(participants.begin(), participants.end());
  const auto n = participants.size();
  require(n >= 3, ErrorCode::InsufficientData, "leave-one-participant-out needs at least 3 participants");
  std::vector<ParticipantSplit> out;
  for (std::size_t i = 0; i < n; ++i) {
    ParticipantSplit s;
    s.test = {participants[i]};
    s.val = {participants[(i + 1) % n]};
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && j != (i + 1) % n) s.train.push_back(participants[j]);
    out.push_back(std::move(s));
  }
  return out;
}

inline Split materialize(const ParticipantSplit& ps, const std::vector<LabeledSample>& data) {
  const std::set<int> tr(ps.train.begin(), ps.train.end()), va(ps.val.begin(), ps.val.end()),
      te(ps.test.begin(), ps.test.end());
  Split s;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int p = data[i].participant_id;
    if (tr.count(p)) s.train.push_back(i);
    else if (va.count(p)) s.val.push_back(i);
    else if (te.count(p)) s.test.push_back(i);
  }
  return s;
}

/// Sample-level k-fold stratified by (participant, class). Each group is
/// shuffled and dealt round-robin, continuing from where the previous group
/// stopped, so every fold draws from every participant when groups have at
/// least k samples. Fold i is test and fold i+1 (mod k) validation.
inline std::vector<Split> seen_kfold(const std::vector<LabeledSample>& data, int k, std::uint64_t seed) {
  require(k >= 3, ErrorCode::InvalidArgument, "k-fold needs k >= 3");
  require(data.size() >= static_cast<std::size_t>(k), ErrorCode::InsufficientData, "fewer samples than folds");
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i)
    groups[{data[i].participant_id, static_cast<int>(data[i].label)}].push_back(i);

  std::vector<int> fold_of(data.size(), 0);
  std::size_t next = 0;
  for (auto& [key, members] : groups) {
    Rng rng = make_rng(seed, {0xf01d, static_cast<std::uint64_t>(key.first), static_cast<std::uint64_t>(key.second)});
    std::shuffle(members.begin(), members.end(), rng);
    for (auto idx : members) fold_of[idx] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }

  std::vector<Split> out(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    const int val_fold = (f + 1) % k;
    auto& s = out[static_cast<std::size_t>(f)];
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (fold_of[i] == f) s.test.push_back(i);
      else if (fold_of[i] == val_fold) s.val.push_back(i);
      else s.train.push_back(i);
    }
  }
  return out;
}

/// Splits for the protocol, truncated to `max_splits` when set. The sweep
/// protocol uses the five-fold splits so every window size sees the same folds.
inline std::vector<Split> make_splits(const ExperimentSpec& spec, const std::vector<LabeledSample>& data) {
  std::vector<Split> out;
  switch (spec.protocol) {
    case Protocol::UnseenRandomSplit:
      for (const auto& ps : unseen_partitions(participants_of(data), spec.train_participants, spec.val_participants,
                                              spec.test_participants, spec.repeats, spec.seed))
        out.push_back(materialize(ps, data));
      break;
    case Protocol::LeaveOneParticipantOut:
      for (const auto& ps : lopo_partitions(participants_of(data))) out.push_back(materialize(ps, data));
      break;
    case Protocol::SeenKFold:
    case Protocol::WindowSweep:
    case Protocol::SeenKFold6:
      out = seen_kfold(data, spec.folds(), spec.seed);
      break;
  }
  if (spec.max_splits && static_cast<std::size_t>(*spec.max_splits) < out.size())
    out.resize(static_cast<std::size_t>(*spec.max_splits));
  for (std::size_t i = 0; i < out.size(); ++i)
    require(!out[i].train.empty() && !out[i].val.empty() && !out[i].test.empty(), ErrorCode::InsufficientData,
            "split " + std::to_string(i) + " has an empty train, validation or test set");
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

using Confusion = std::vector<std::vector<long>>;

/// Rows are true classes, columns predictions.
inline Confusion confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels, int num_classes) {
  require(preds.size() == labels.size(), ErrorCode::ShapeMismatch, "predictions and labels differ in length");
  Confusion cm(static_cast<std::size_t>(num_classes), std::vector<long>(static_cast<std::size_t>(num_classes), 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes && preds[i] >= 0 && preds[i] < num_classes,
            ErrorCode::OutOfRange, "class index out of range");
    ++cm[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(preds[i])];
  }
  return cm;
}

inline long confusion_total(const Confusion& cm) {
  long n = 0;
  for (const auto& row : cm) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

/// trace / total, in [0, 1].
inline double confusion_accuracy(const Confusion& cm) {
  const long n = confusion_total(cm);
  require(n > 0, ErrorCode::InsufficientData, "empty confusion matrix");
  long diag = 0;
  for (std::size_t i = 0; i < cm.size(); ++i) diag += cm[i][i];
  return static_cast<double>(diag) / static_cast<double>(n);
}

/// Per-class recall; classes without test samples get 0.
inline std::vector<double> per_class_recall(const Confusion& cm) {
  std::vector<double> out;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    const long n = std::accumulate(cm[i].begin(), cm[i].end(), 0L);
    out.push_back(n > 0 ? static_cast<double>(cm[i][i]) / static_cast<double>(n) : 0.0);
  }
  return out;
}

inline void add_into(Confusion& acc, const Confusion& cm) {
  if (acc.empty()) {
    acc = cm;
    return;
  }
  for (std::size_t i = 0; i < cm.size(); ++i)
    for (std::size_t j = 0; j < cm.size(); ++j) acc[i][j] += cm[i][j];
}

struct AccuracyStats {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error (sample std / sqrt(n)); a single value has SE 0.
inline AccuracyStats accuracy_stats(const std::vector<double>& acc) {
  require(!acc.empty(), ErrorCode::InsufficientData, "no accuracies to summarize");
  const auto n = static_cast<double>(acc.size());
  AccuracyStats st;
  st.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / n;
  if (acc.size() >= 2) {
    double ss = 0.0;
    for (double a : acc) ss += (a - st.mean) * (a - st.mean);
    st.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Report

/// One summary row: a method at one window size, on one test-session slice.
struct MethodResult {
  std::string method;
  int ws = 40;
  std::string session = "all";  // "all", "1" or "2"
  std::vector<double> accuracies;  // percent, ordered by (split, run)
  double mean_acc = 0.0;
  double se = 0.0;
  Confusion confusion;
  std::vector<double> recall;

  /// Row label for the CSV summary.
  std::string label(Protocol protocol) const {
    std::string s = method;
    if (protocol == Protocol::WindowSweep) s += "@ws" + std::to_string(ws);
    if (session != "all") s += "[session" + session + "]";
    return s;
  }

  bool operator==(const MethodResult&) const = default;
};

struct EvalReport {
  Protocol protocol = Protocol::UnseenRandomSplit;
  int num_classes = 4;
  std::size_t num_splits = 0;
  int runs_per_config = 1;
  std::uint64_t seed = 0;
  std::vector<MethodResult> results;

  const MethodResult* find(const std::string& method, const std::string& session = "all",
                           std::optional<int> ws = std::nullopt) const {
    for (const auto& r : results)
      if (r.method == method && r.session == session && (!ws || r.ws == *ws)) return &r;
    return nullptr;
  }

  bool operator==(const EvalReport&) const = default;
};

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : r.results)
    rows.push_back({{"method", m.method},
                    {"ws", m.ws},
                    {"session", m.session},
                    {"accuracies", m.accuracies},
                    {"mean_acc", m.mean_acc},
                    {"se", m.se},
                    {"n_runs", m.accuracies.size()},
                    {"confusion", m.confusion},
                    {"recall", m.recall}});
  return {{"protocol", to_string(r.protocol)},
          {"num_classes", r.num_classes},
          {"num_splits", r.num_splits},
          {"runs_per_config", r.runs_per_config},
          {"seed", r.seed},
          {"results", rows}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.protocol = parse_protocol(j.at("protocol").get<std::string>());
    r.num_classes = j.at("num_classes").get<int>();
    r.num_splits = j.at("num_splits").get<std::size_t>();
    r.runs_per_config = j.at("runs_per_config").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& row : j.at("results")) {
      MethodResult m;
      m.method = row.at("method").get<std::string>();
      m.ws = row.at("ws").get<int>();
      m.session = row.at("session").get<std::string>();
      m.accuracies = row.at("accuracies").get<std::vector<double>>();
      m.mean_acc = row.at("mean_acc").get<double>();
      m.se = row.at("se").get<double>();
      m.confusion = row.at("confusion").get<Confusion>();
      m.recall = row.at("recall").get<std::vector<double>>();
      r.results.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::BadFormat, std::string("report: ") + ex.what());
  }
  return r;
}

/// `method,protocol,mean_acc,se,n_runs`
inline void write_summary_csv(std::ostream& os, const EvalReport& r) {
  os << "method,protocol,mean_acc,se,n_runs\n";
  char buf[64];
  for (const auto& m : r.results) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%zu", m.mean_acc, m.se, m.accuracies.size());
    os << m.label(r.protocol) << ',' << to_string(r.protocol) << ',' << buf << '\n';
  }
}

/// Confusion matrix with class-name header row and column.
inline void write_confusion_csv(std::ostream& os, const Confusion& cm) {
  os << "true\\pred";
  for (std::size_t j = 0; j < cm.size(); ++j) os << ',' << class_name(static_cast<SptClass>(j));
  os << '\n';
  for (std::size_t i = 0; i < cm.size(); ++i) {
    os << class_name(static_cast<SptClass>(i));
    for (long v : cm[i]) os << ',' << v;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Harness

/// Identifies one training job; `seed` is shared by all methods on the same
/// split and run so methods are compared on equal footing.
struct JobContext {
  Method method;
  int ws = 40;
  std::size_t split = 0;
  int run = 0;
  std::uint64_t seed = 0;
  int num_classes = 4;
};

/// Trains on (train, val) and returns one predicted class per test example.
using Learner = std::function<std::vector<int>(const JobContext&, const std::vector<Example>& train,
                                               const std::vector<Example>& val, const std::vector<Example>& test)>;

/// The network for `ctx.method`, sized from the example views.
inline nn::ModelSpec model_spec_for(const JobContext& ctx, const FeatureConfig& features, int frames) {
  nn::ModelSpec m;
  m.architecture = ctx.method.architecture;
  m.num_classes = ctx.num_classes;
  const auto td = features.td_shape(frames);
  const auto wr = features.wrtft_shape(frames);
  m.td_input_shape = {td.rows, td.cols};
  m.wrtft_input_shape = {wr.rows, wr.cols};
  m.seed = derive_seed(ctx.seed, {0x30de1});
  return m;
}

inline Learner network_learner(const nn::TrainConfig& train_cfg, const FeatureConfig& base_features, int frames) {
  return [train_cfg, base_features, frames](const JobContext& ctx, const std::vector<Example>& train,
                                            const std::vector<Example>& val, const std::vector<Example>& test) {
    FeatureConfig features = base_features;
    features.ws = ctx.ws;
    auto net = nn::build_model<float>(model_spec_for(ctx, features, frames));
    nn::TrainConfig cfg = train_cfg;
    cfg.seed = derive_seed(ctx.seed, {0x7a1});
    nn::train(net, train, val, cfg);
    return nn::evaluate(net, test).predictions;
  };
}

/// Predicts every test label correctly.
inline Learner perfect_learner() {
  return [](const JobContext&, const std::vector<Example>&, const std::vector<Example>&,
            const std::vector<Example>& test) {
    std::vector<int> out;
    for (const auto& e : test) out.push_back(e.label);
    return out;
  };
}

/// Predicts the most frequent training label (lowest index on ties).
inline Learner majority_learner() {
  return [](const JobContext& ctx, const std::vector<Example>& train, const std::vector<Example>&,
            const std::vector<Example>& test) {
    std::vector<int> counts(static_cast<std::size_t>(ctx.num_classes), 0);
    for (const auto& e : train) ++counts[static_cast<std::size_t>(e.label)];
    const int top = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    return std::vector<int>(test.size(), top);
  };
}

/// Throws if any training sample (augmented copies included) shares a
/// provenance id with a validation or test sample.
inline void assert_no_leakage(const std::vector<Example>& train, const std::vector<Example>& val,
                              const std::vector<Example>& test) {
  std::set<std::uint64_t> held;
  for (const auto* set : {&val, &test})
    for (const auto& e : *set) held.insert(e.sample_id);
  for (const auto& e : train)
    require(!held.count(e.sample_id), ErrorCode::Runtime,
            "leakage: training sample id " + std::to_string(e.sample_id) + " also held out");
}

namespace detail {

struct JobOutcome {
  std::vector<int> labels, preds, sessions;
};

inline std::vector<Example> featurize_all(const std::vector<LabeledSample>& cropped, const std::vector<std::size_t>& idx,
                                          const FeatureConfig& cfg) {
  std::vector<Example> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(featurize_cropped(cropped[i], cfg));
  return out;
}

inline std::vector<Example> featurize_all(const std::vector<LabeledSample>& samples, const FeatureConfig& cfg) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(featurize_cropped(s, cfg));
  return out;
}

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads; the first failure is rethrown.
template <typename F>
void parallel_for(std::size_t n, int jobs, F fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<int>(jobs, static_cast<int>(n)); ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

using ProgressCallback = std::function<void(const JobContext&, double accuracy)>;

/// For every window size, split and run: crop, augment the training part when
/// a method asks for it, featurize, train each method and score the test set.
/// Accuracies from all splits and runs are pooled per method.
inline EvalReport run_experiment(const ExperimentSpec& spec, const std::vector<LabeledSample>& dataset,
                                 const Learner& learner, const ProgressCallback& progress = {}) {
  spec.validate();
  const int classes = num_classes(spec.class_mode);
  std::vector<LabeledSample> data;
  for (const auto& s : dataset) {
    require(valid_in_mode(s.label, spec.class_mode), ErrorCode::InvalidArgument,
            "label " + std::string(class_name(s.label)) + " not allowed in " + std::to_string(classes) + "-class mode");
    if (!spec.session_filter || s.session_id == *spec.session_filter) data.push_back(s);
  }
  require(!data.empty(), ErrorCode::InsufficientData, "no samples after session filter");
  const int frames = static_cast<int>(data.front().frames.cols());
  for (const auto& s : data)
    require(s.frames.cols() == frames, ErrorCode::ShapeMismatch, "all samples must have the same frame count");

  const auto splits = make_splits(spec, data);
  const auto ws_list = spec.window_sizes();
  const bool any_aug = std::any_of(spec.methods.begin(), spec.methods.end(), [](const Method& m) { return m.augmented; });
  const std::size_t n_methods = spec.methods.size();
  const std::size_t runs = static_cast<std::size_t>(spec.runs_per_config);
  const std::size_t units = ws_list.size() * splits.size() * runs;

  std::vector<std::vector<LabeledSample>> cropped(ws_list.size());
  for (std::size_t w = 0; w < ws_list.size(); ++w) {
    cropped[w].reserve(data.size());
    for (const auto& s : data) cropped[w].push_back(preprocess_sample(s, ws_list[w]));
  }

  // outcomes[unit * n_methods + method]
  std::vector<detail::JobOutcome> outcomes(units * n_methods);
  std::mutex progress_mutex;
  detail::parallel_for(units, spec.jobs, [&](std::size_t unit) {
    const std::size_t w = unit / (splits.size() * runs);
    const std::size_t split = (unit / runs) % splits.size();
    const int run = static_cast<int>(unit % runs);
    const Split& sp = splits[split];
    FeatureConfig fc = spec.features;
    fc.ws = ws_list[w];
    const std::uint64_t seed =
        derive_seed(spec.seed, {0x1ab, static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(run)});

    const auto train = detail::featurize_all(cropped[w], sp.train, fc);
    const auto val = detail::featurize_all(cropped[w], sp.val, fc);
    const auto test = detail::featurize_all(cropped[w], sp.test, fc);
    std::vector<Example> train_aug;
    if (any_aug) {
      std::vector<LabeledSample> src;
      for (auto i : sp.train) src.push_back(cropped[w][i]);
      augment::AugmentSpec as = spec.augment;
      as.rng_seed = derive_seed(seed, {0xa06});
      train_aug = detail::featurize_all(augment::expand(src, as), fc);
    }

    for (std::size_t m = 0; m < n_methods; ++m) {
      const Method& method = spec.methods[m];
      const auto& tr = method.augmented ? train_aug : train;
      assert_no_leakage(tr, val, test);
      JobContext ctx{method, fc.ws, split, run, seed, classes};
      std::vector<int> preds;
      try {
        preds = learner(ctx, tr, val, test);
      } catch (const Error& e) {
        throw Error(e.code(), method.name() + " ws=" + std::to_string(fc.ws) + " split=" + std::to_string(split) +
                                  " run=" + std::to_string(run) + ": " + e.what());
      }
      require(preds.size() == test.size(), ErrorCode::ShapeMismatch, "learner returned wrong number of predictions");
      auto& out = outcomes[unit * n_methods + m];
      out.preds = std::move(preds);
      for (const auto& e : test) {
        out.labels.push_back(e.label);
        out.sessions.push_back(e.session_id);
      }
      if (progress) {
        const auto cm = confusion_matrix(out.preds, out.labels, classes);
        std::lock_guard lock(progress_mutex);
        progress(ctx, confusion_accuracy(cm));
      }
    }
  });

  std::set<int> sessions;
  for (const auto& s : data) sessions.insert(s.session_id);
  std::vector<std::string> slices{"all"};
  if (sessions.size() > 1)
    for (int s : sessions) slices.push_back(std::to_string(s));

  EvalReport report;
  report.protocol = spec.protocol;
  report.num_classes = classes;
  report.num_splits = splits.size();
  report.runs_per_config = spec.runs_per_config;
  report.seed = spec.seed;
  for (std::size_t m = 0; m < n_methods; ++m)
    for (std::size_t w = 0; w < ws_list.size(); ++w)
      for (const auto& slice : slices) {
        MethodResult r;
        r.method = spec.methods[m].name();
        r.ws = ws_list[w];
        r.session = slice;
        for (std::size_t k = 0; k < splits.size() * runs; ++k) {
          const auto& o = outcomes[(w * splits.size() * runs + k) * n_methods + m];
          std::vector<int> p, l;
          for (std::size_t i = 0; i < o.preds.size(); ++i)
            if (slice == "all" || std::to_string(o.sessions[i]) == slice) {
              p.push_back(o.preds[i]);
              l.push_back(o.labels[i]);
            }
          if (l.empty()) continue;
          const auto cm = confusion_matrix(p, l, classes);
          r.accuracies.push_back(100.0 * confusion_accuracy(cm));
          add_into(r.confusion, cm);
        }
        if (r.accuracies.empty()) continue;
        const auto st = accuracy_stats(r.accuracies);
        r.mean_acc = st.mean;
        r.se = st.se;
        r.recall = per_class_recall(r.confusion);
        report.results.push_back(std::move(r));
      }
  return report;
}

}  // namespace spn::eval
