#pragma once

// `spn` command-line front end: simulate, featurize, augment-preview, train,
// eval and report. Every run prints its resolved configuration as JSON on
// stdout; the keys are the long flag names, so the JSON can be fed back with
// --config to repeat the run.

#include <spn/augment.hpp>
#include <spn/dataformat.hpp>
#include <spn/error.hpp>
#include <spn/eval.hpp>
#include <spn/features.hpp>
#include <spn/nn/checkpoint.hpp>
#include <spn/nn/train.hpp>
#include <spn/simulate.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace spn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kRuntimeError = 3 };

struct Options {
  // shared
  std::string manifest;
  std::string out;
  std::uint64_t seed = 0;
  int class_mode = 4;
  std::string session = "both";
  int ws = dsp::kDefaultWindowSize;
  int stft_seg = 32;
  int stft_hop = 4;
  int stft_fft = 64;
  // simulate
  int participants = 26;
  int per_class = 5;
  bool distractor = false;
  double noise = sim::SimConfig{}.noise_sigma;
  // augment-preview
  int index = 0;
  // train / eval
  std::string aug = "on";
  std::string arch = "spn";
  std::string protocol = "unseen";
  std::string methods = "spn+aug,td+aug,wrtft+aug,spn,td,wrtft";
  std::string split = "18,4,4";
  std::string ws_list = "30,35,40,45,50,55,60";
  int fold = 0;
  int repeats = 10;
  int max_splits = 0;
  int runs = 5;
  int jobs = 1;
  int max_epochs = 300;
  int patience = 20;
  double lr = 1e-4;
  int batch_size = 16;
  // report
  std::string report;
  std::string csv;
  std::string confusion_dir;
};

inline std::vector<int> parse_int_list(const std::string& s, const std::string& flag) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      require(used == item.size(), ErrorCode::InvalidArgument, "");
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "--" + flag + ": '" + item + "' is not an integer");
    }
  }
  require(!out.empty(), ErrorCode::InvalidArgument, "--" + flag + " is empty");
  return out;
}

inline FeatureConfig feature_config(const Options& o) {
  FeatureConfig fc;
  fc.ws = o.ws;
  fc.stft.segment_len = o.stft_seg;
  fc.stft.hop = o.stft_hop;
  fc.stft.fft_len = o.stft_fft;
  require(fc.ws >= 1, ErrorCode::InvalidArgument, "--ws must be positive");
  fc.stft.validate();
  return fc;
}

inline std::optional<int> session_filter(const Options& o) {
  if (o.session == "both") return std::nullopt;
  if (o.session == "1" || o.session == "2") return std::stoi(o.session);
  fail(ErrorCode::InvalidArgument, "--session must be 1, 2 or both");
}

inline nn::TrainConfig train_config(const Options& o, std::uint64_t seed) {
  nn::TrainConfig tc;
  tc.lr = o.lr;
  tc.batch_size = o.batch_size;
  tc.max_epochs = o.max_epochs;
  tc.patience = o.patience;
  tc.seed = seed;
  tc.validate();
  return tc;
}

inline eval::ExperimentSpec experiment_spec(const Options& o) {
  eval::ExperimentSpec es;
  es.protocol = eval::parse_protocol(o.protocol);
  const auto counts = parse_int_list(o.split, "split");
  require(counts.size() == 3, ErrorCode::InvalidArgument, "--split expects train,val,test participant counts");
  es.train_participants = counts[0];
  es.val_participants = counts[1];
  es.test_participants = counts[2];
  es.repeats = o.repeats;
  es.ws_list = parse_int_list(o.ws_list, "ws-list");
  if (o.max_splits > 0) es.max_splits = o.max_splits;
  es.methods = eval::parse_methods(o.methods);
  if (o.aug == "off")
    for (auto& m : es.methods) m.augmented = false;
  else
    require(o.aug == "on", ErrorCode::InvalidArgument, "--aug must be on or off");
  es.runs_per_config = o.runs;
  es.class_mode = class_mode_from_int(o.class_mode);
  es.session_filter = session_filter(o);
  es.features = feature_config(o);
  es.train = train_config(o, o.seed);
  es.seed = o.seed;
  es.jobs = o.jobs;
  es.validate();
  return es;
}

struct LoadedData {
  DatasetManifest manifest;
  std::vector<LabeledSample> samples;
};

inline LoadedData load(const Options& o) {
  require(!o.manifest.empty(), ErrorCode::InvalidArgument, "--manifest is required");
  LoadedData d;
  d.manifest = load_manifest(o.manifest);
  d.samples = load_dataset(d.manifest, fs::path(o.manifest).parent_path());
  require(!d.samples.empty(), ErrorCode::InsufficientData, "manifest has no entries");
  return d;
}

inline void write_text(const fs::path& path, const std::string& text) { spn::detail::write_file(path, text); }

inline std::string matrix_csv(const Matrix& m) {
  std::string out;
  char buf[32];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, c ? ",%.9g" : "%.9g", m(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline std::string sample_stem(const LabeledSample& s, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04zu_p%02d_%s_s%d", i, s.participant_id, std::string(class_name(s.label)).c_str(),
                s.session_id);
  return buf;
}

inline void ensure_dir(const std::string& dir) {
  require(!dir.empty(), ErrorCode::InvalidArgument, "--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
}

// ---------------------------------------------------------------------------

inline json cmd_simulate(const Options& o) {
  ensure_dir(o.out);
  sim::SimConfig sc;
  sc.class_mode = class_mode_from_int(o.class_mode);
  sc.rng_seed = o.seed;
  sc.noise_sigma = o.noise;
  std::vector<LabeledSample> data = o.distractor
                                        ? sim::synth_two_session_dataset(sc, o.participants, o.per_class, sim::Distractor{})
                                        : sim::synth_dataset(sc, o.participants, o.per_class);
  DatasetManifest m;
  m.radar_config = sc.radar;
  m.class_mode = sc.class_mode;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    const std::string file = sample_stem(s, i) + ".uwbf";
    write_sample(s, fs::path(o.out) / file);
    m.entries.push_back({file, s.label, s.participant_id, s.session_id, s.dataset_id});
  }
  save_manifest(m, fs::path(o.out) / "manifest.json");
  return {{"files", data.size()}, {"manifest", (fs::path(o.out) / "manifest.json").string()}};
}

inline json cmd_featurize(const Options& o) {
  ensure_dir(o.out);
  const auto fc = feature_config(o);
  const auto d = load(o);
  std::string windows = "index,file,start,end\n";
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto pp = preprocess(d.samples[i].frames, fc.ws);
    const std::string stem = sample_stem(d.samples[i], i);
    write_text(fs::path(o.out) / (stem + "_td.csv"), matrix_csv(dsp::time_difference(pp.cropped)));
    write_text(fs::path(o.out) / (stem + "_wrtft.csv"), matrix_csv(wrtft::wrtft(pp.cropped, fc.stft).image));
    windows += std::to_string(i) + "," + d.manifest.entries[i].file + "," + std::to_string(pp.window.start) + "," +
               std::to_string(pp.window.end) + "\n";
  }
  write_text(fs::path(o.out) / "windows.csv", windows);
  return {{"samples", d.samples.size()}};
}

inline json cmd_augment_preview(const Options& o) {
  ensure_dir(o.out);
  const auto d = load(o);
  require(o.index >= 0 && static_cast<std::size_t>(o.index) < d.samples.size(), ErrorCode::InvalidArgument,
          "--index out of range");
  const auto cropped = preprocess_sample(d.samples[static_cast<std::size_t>(o.index)], o.ws);
  augment::AugmentSpec as;
  as.rng_seed = o.seed;
  const auto copies = augment::expand({cropped}, as);
  write_text(fs::path(o.out) / "original.csv", matrix_csv(copies.front().frames));
  for (std::size_t j = 0; j < as.combos.size(); ++j)
    write_text(fs::path(o.out) / (augment::combo_name(as.combos[j]) + ".csv"), matrix_csv(copies[j + 1].frames));
  return {{"outputs", copies.size()}};
}

inline json cmd_train(const Options& o) {
  ensure_dir(o.out);
  auto es = experiment_spec(o);
  const auto d = load(o);
  std::vector<LabeledSample> data;
  for (const auto& s : d.samples)
    if (!es.session_filter || s.session_id == *es.session_filter) data.push_back(s);
  const auto splits = eval::make_splits(es, data);
  require(o.fold >= 0 && static_cast<std::size_t>(o.fold) < splits.size(), ErrorCode::InvalidArgument,
          "--fold out of range (" + std::to_string(splits.size()) + " splits)");
  const auto& sp = splits[static_cast<std::size_t>(o.fold)];

  std::vector<LabeledSample> cropped;
  for (const auto& s : data) cropped.push_back(preprocess_sample(s, es.features.ws));
  auto pick = [&](const std::vector<std::size_t>& idx) {
    std::vector<LabeledSample> v;
    for (auto i : idx) v.push_back(cropped[i]);
    return v;
  };
  auto train_samples = pick(sp.train);
  if (o.aug == "on") {
    augment::AugmentSpec as = es.augment;
    as.rng_seed = derive_seed(o.seed, {0xa06});
    train_samples = augment::expand(train_samples, as);
  }
  const auto train = eval::detail::featurize_all(train_samples, es.features);
  const auto val = eval::detail::featurize_all(pick(sp.val), es.features);
  const auto test = eval::detail::featurize_all(pick(sp.test), es.features);
  eval::assert_no_leakage(train, val, test);

  eval::JobContext ctx{{nn::parse_architecture(o.arch), o.aug == "on"}, es.features.ws, static_cast<std::size_t>(o.fold),
                       0, o.seed, num_classes(es.class_mode)};
  auto net = nn::build_model<float>(eval::model_spec_for(ctx, es.features, static_cast<int>(data.front().frames.cols())));
  const auto history = nn::train(net, train, val, es.train, [](const nn::EpochRecord& r) {
    std::fprintf(stderr, "epoch %d train_loss %.4f val_loss %.4f val_acc %.4f\n", r.epoch, r.train_loss, r.val_loss,
                 r.val_acc);
  });
  const auto ev = nn::evaluate(net, test);
  nn::save_checkpoint(net, fs::path(o.out) / "model.spnw");
  std::ostringstream hist;
  nn::write_history_csv(hist, history);
  write_text(fs::path(o.out) / "history.csv", hist.str());
  std::vector<int> labels;
  for (const auto& e : test) labels.push_back(e.label);
  std::ostringstream cm;
  eval::write_confusion_csv(cm, eval::confusion_matrix(ev.predictions, labels, net.num_classes()));
  write_text(fs::path(o.out) / "confusion.csv", cm.str());
  return {{"best_epoch", history.best_epoch},
          {"epochs_run", history.epochs.size()},
          {"test_accuracy", 100.0 * ev.accuracy},
          {"parameters", net.parameter_count()}};
}

inline void write_report_files(const eval::EvalReport& rep, const Options& o) {
  if (!o.csv.empty()) {
    std::ostringstream ss;
    eval::write_summary_csv(ss, rep);
    write_text(o.csv, ss.str());
  }
  if (!o.confusion_dir.empty()) {
    ensure_dir(o.confusion_dir);
    for (const auto& r : rep.results) {
      std::ostringstream ss;
      eval::write_confusion_csv(ss, r.confusion);
      std::string name = r.label(rep.protocol);
      for (char& c : name)
        if (c == '+' || c == '@' || c == '[' || c == ']') c = '_';
      write_text(fs::path(o.confusion_dir) / (name + ".csv"), ss.str());
    }
  }
}

inline json cmd_eval(const Options& o) {
  require(!o.out.empty(), ErrorCode::InvalidArgument, "--out is required");
  const auto es = experiment_spec(o);
  const auto d = load(o);
  const int frames = static_cast<int>(d.samples.front().frames.cols());
  const auto rep = eval::run_experiment(es, d.samples, eval::network_learner(es.train, es.features, frames),
                                        [](const eval::JobContext& c, double acc) {
                                          std::fprintf(stderr, "%s ws=%d split=%zu run=%d acc=%.2f%%\n",
                                                       c.method.name().c_str(), c.ws, c.split, c.run, 100.0 * acc);
                                        });
  const fs::path out(o.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path().string());
  write_text(out, eval::to_json(rep).dump(2) + "\n");
  write_report_files(rep, o);
  json rows = json::array();
  for (const auto& r : rep.results) rows.push_back({{"method", r.label(rep.protocol)}, {"mean_acc", r.mean_acc}, {"se", r.se}});
  return {{"report", o.out}, {"results", rows}};
}

inline json cmd_report(const Options& o) {
  require(!o.report.empty(), ErrorCode::InvalidArgument, "--report is required");
  json j;
  try {
    j = json::parse(spn::detail::read_file(o.report));
  } catch (const json::parse_error& ex) {
    fail(ErrorCode::BadFormat, o.report + ": " + ex.what());
  }
  const auto rep = eval::report_from_json(j);
  write_report_files(rep, o);
  std::ostringstream ss;
  eval::write_summary_csv(ss, rep);
  std::fputs(ss.str().c_str(), stderr);
  return {{"rows", rep.results.size()}};
}

// ---------------------------------------------------------------------------

/// Expands `--config file.json` into the equivalent flags, in place.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] != "--config") continue;
    json j;
    try {
      j = json::parse(spn::detail::read_file(args[i + 1]));
    } catch (const json::parse_error& ex) {
      fail(ErrorCode::BadFormat, args[i + 1] + ": " + ex.what());
    }
    const json& cfg = j.contains("config") ? j.at("config") : j;
    std::vector<std::string> flags;
    for (const auto& [key, value] : cfg.items()) {
      if (value.is_boolean()) {
        if (value.get<bool>()) flags.push_back("--" + key);
        continue;
      }
      flags.push_back("--" + key);
      flags.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(i), flags.begin(), flags.end());
    break;
  }
  return args;
}

/// Parses and runs one subcommand; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"Sleep postural transition classification from UWB radar frames", "spn"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto shared = [&](CLI::App* c, bool needs_manifest) {
    if (needs_manifest) c->add_option("--manifest", o.manifest, "Dataset manifest JSON")->required();
    c->add_option("--seed", o.seed, "Base random seed");
    c->add_option("--class-mode", o.class_mode, "Number of classes (4 or 5)")->check(CLI::IsMember({4, 5}));
  };
  auto features = [&](CLI::App* c) {
    c->add_option("--ws", o.ws, "Range window size in bins");
    c->add_option("--stft-seg", o.stft_seg, "STFT segment length");
    c->add_option("--stft-hop", o.stft_hop, "STFT hop");
    c->add_option("--stft-fft", o.stft_fft, "STFT FFT size (power of two)");
  };
  auto training = [&](CLI::App* c) {
    c->add_option("--protocol", o.protocol, "Split protocol")
        ->check(CLI::IsMember({"unseen", "seen5", "sweep", "lopo", "seen6"}));
    c->add_option("--split", o.split, "Participant counts train,val,test for the unseen protocol");
    c->add_option("--repeats", o.repeats, "Random partitions for the unseen protocol");
    c->add_option("--session", o.session, "Session filter")->check(CLI::IsMember({"1", "2", "both"}));
    c->add_option("--aug", o.aug, "Augment the training split")->check(CLI::IsMember({"on", "off"}));
    c->add_option("--max-epochs", o.max_epochs, "Epoch cap");
    c->add_option("--patience", o.patience, "Early-stopping patience in epochs");
    c->add_option("--lr", o.lr, "Adam learning rate");
    c->add_option("--batch-size", o.batch_size, "Mini-batch size");
  };

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset (UWBF1 files + manifest)");
  simulate->add_option("--out", o.out, "Output directory")->required();
  simulate->add_option("--participants", o.participants, "Number of participants");
  simulate->add_option("--per-class", o.per_class, "Samples per class per participant");
  simulate->add_option("--noise", o.noise, "Receiver noise standard deviation");
  simulate->add_flag("--distractor", o.distractor, "Add a second session with a moving distractor");
  shared(simulate, false);

  auto* featurize = app.add_subcommand("featurize", "Dump TD and WRTFT views as CSV");
  featurize->add_option("--out", o.out, "Output directory")->required();
  shared(featurize, true);
  features(featurize);

  auto* preview = app.add_subcommand("augment-preview", "Write every augmentation of one sample as CSV");
  preview->add_option("--out", o.out, "Output directory")->required();
  preview->add_option("--index", o.index, "Manifest entry index");
  shared(preview, true);
  features(preview);

  auto* train = app.add_subcommand("train", "Train one network on one split");
  train->add_option("--out", o.out, "Output directory")->required();
  train->add_option("--arch", o.arch, "Network")->check(CLI::IsMember({"spn", "td", "wrtft"}));
  train->add_option("--fold", o.fold, "Split index");
  shared(train, true);
  features(train);
  training(train);

  auto* evaluate = app.add_subcommand("eval", "Run an experiment protocol and write a report");
  evaluate->add_option("--out", o.out, "Report JSON path")->required();
  evaluate->add_option("--methods", o.methods, "Comma-separated methods, e.g. spn+aug,wrtft");
  evaluate->add_option("--runs", o.runs, "Seeds per split");
  evaluate->add_option("--max-splits", o.max_splits, "Evaluate only the first n splits (0 = all)");
  evaluate->add_option("--ws-list", o.ws_list, "Window sizes for the sweep protocol");
  evaluate->add_option("--jobs", o.jobs, "Parallel jobs");
  evaluate->add_option("--csv", o.csv, "Summary CSV path");
  evaluate->add_option("--confusion-dir", o.confusion_dir, "Directory for confusion CSVs");
  shared(evaluate, true);
  features(evaluate);
  training(evaluate);

  auto* report = app.add_subcommand("report", "Render a report JSON as CSV");
  report->add_option("--report", o.report, "Report JSON from eval")->required();
  report->add_option("--csv", o.csv, "Summary CSV path");
  report->add_option("--confusion-dir", o.confusion_dir, "Directory for confusion CSVs");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_data_error() ? kDataError : kUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  json config;
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || opt->get_lnames().empty()) continue;
    const auto& res = opt->results();
    if (opt->get_expected_min() == 0) {
      config[name] = opt->count() > 0;
      continue;
    }
    std::string value = res.empty() ? opt->get_default_str() : res.back();
    if (value.empty()) continue;
    config[name] = value;
  }

  json result;
  try {
    const std::string name = cmd->get_name();
    json echo = {{"command", name}, {"config", config}};
    out << echo.dump(2) << std::endl;
    if (name == "simulate") result = cmd_simulate(o);
    else if (name == "featurize") result = cmd_featurize(o);
    else if (name == "augment-preview") result = cmd_augment_preview(o);
    else if (name == "train") result = cmd_train(o);
    else if (name == "eval") result = cmd_eval(o);
    else result = cmd_report(o);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.is_data_error()) return kDataError;
    return e.code() == ErrorCode::InvalidArgument ? kUsage : kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  out << json{{"result", result}}.dump(2) << std::endl;
  return kOk;
}

}  // namespace spn::cli
