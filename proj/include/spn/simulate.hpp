#pragma once

// Synthetic UWB frame matrices for postural transitions. Each sample is a
// superposition of Gaussian-in-fast-time echoes from a rigid set of body
// scatterers following a range trajectory (breathing + logistic transition),
// plus static clutter, per-bin DC, white noise and an optional periodic
// distractor.

#include <spn/dataformat.hpp>
#include <spn/error.hpp>
#include <spn/matrix.hpp>
#include <spn/random.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spn::sim {

struct ClassTemplate {
  double delta_bins = 0.0;  // net range displacement of the body
  double duration_s = 2.5;
};

struct Distractor {
  int range_bin = 120;
  double period_s = 2.0;
  double amplitude = 1.0;
  int bin_spread = 20;  // per-participant placement jitter (bins)
};

struct SimConfig {
  RadarConfig radar;
  ClassMode class_mode = ClassMode::Four;
  int num_paths = 5;
  double body_extent_bins = 12.0;
  std::pair<int, int> body_start_range = {55, 90};
  double pulse_width_bins = 2.0;
  double clutter_amplitude = 1.0;
  double dc_offset_scale = 0.5;
  double noise_sigma = 0.005;
  double breathing_freq_hz = 0.25;
  double breathing_amp_bins = 0.3;
  std::pair<int, int> transition_start_range = {30, 70};  // frames
  double participant_extent_jitter = 0.15;
  double sample_extent_jitter = 0.12;
  double bg_jitter_bins = 1.5;  // 0 disables background limb bursts
  std::map<SptClass, ClassTemplate> class_templates = {
      {SptClass::SUSI, {4.0, 2.5}}, {SptClass::SUPR, {10.0, 2.5}}, {SptClass::SISU, {-4.0, 2.5}},
      {SptClass::PRSU, {-10.0, 2.5}}, {SptClass::BG, {0.0, 2.5}}};
  std::optional<Distractor> distractor;
  std::uint64_t rng_seed = 0;

  void validate() const {
    radar.validate();
    require(num_paths >= 1, ErrorCode::InvalidArgument, "num_paths must be >= 1");
    require(pulse_width_bins > 0.0, ErrorCode::InvalidArgument, "pulse width must be positive");
    require(noise_sigma >= 0.0 && clutter_amplitude >= 0.0 && dc_offset_scale >= 0.0 && breathing_amp_bins >= 0.0 &&
                bg_jitter_bins >= 0.0,
            ErrorCode::InvalidArgument, "amplitude parameters must be non-negative");
    require(transition_start_range.first <= transition_start_range.second && body_start_range.first <=
                                                                                   body_start_range.second,
            ErrorCode::InvalidArgument, "ranges must be ordered");
    for (auto c : {SptClass::SUSI, SptClass::SUPR, SptClass::SISU, SptClass::PRSU})
      require(class_templates.contains(c), ErrorCode::InvalidArgument, "missing class template");
    for (const auto& [c, t] : class_templates)
      require(t.duration_s > 0.0, ErrorCode::InvalidArgument, "template durations must be positive");
    const auto& t = class_templates;
    require(t.at(SptClass::SUSI).delta_bins == -t.at(SptClass::SISU).delta_bins &&
                t.at(SptClass::SUPR).delta_bins == -t.at(SptClass::PRSU).delta_bins,
            ErrorCode::InvalidArgument, "reverse transitions must mirror their forward displacement");
    require(std::abs(t.at(SptClass::SUPR).delta_bins) > std::abs(t.at(SptClass::SUSI).delta_bins),
            ErrorCode::InvalidArgument, "prone transitions must move further than side transitions");
  }
};

/// Radial distance of range bin `m`.
inline double range_of_bin(const RadarConfig& cfg, int m) {
  require(m >= 0 && m < cfg.num_range_bins, ErrorCode::OutOfRange,
          "bin " + std::to_string(m) + " outside [0, " + std::to_string(cfg.num_range_bins) + ")");
  return m * cfg.range_bin_step_m;
}

/// Body-centre range bin at every slow-time frame.
struct Trajectory {
  std::vector<double> center_bin;
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {

struct Scatterer {
  double offset_bins;
  double amplitude;
};

inline std::vector<Scatterer> body_scatterers(const SimConfig& cfg, Rng& rng) {
  std::vector<Scatterer> out;
  const int n = cfg.num_paths;
  for (int i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1) - 0.5;
    out.push_back({frac * cfg.body_extent_bins + uniform(rng, -0.5, 0.5), uniform(rng, 0.5, 1.0)});
  }
  return out;
}

inline double gaussian_pulse(double dist, double width) { return std::exp(-0.5 * (dist / width) * (dist / width)); }

}  // namespace detail

/// Single labeled sample. `sample_index` selects an independent draw for the
/// same (participant, label).
inline LabeledSample synth_sample(const SimConfig& cfg, SptClass label, int participant_id, int sample_index = 0) {
  cfg.validate();
  require(valid_in_mode(label, cfg.class_mode), ErrorCode::InvalidArgument, "BG requires 5-class mode");
  require(participant_id >= 0, ErrorCode::InvalidArgument, "participant id must be non-negative");

  const int rows = cfg.radar.num_range_bins;
  const int cols = cfg.radar.slow_time_len;
  const double fr = cfg.radar.frame_rate_hz;
  Rng rng = make_rng(cfg.rng_seed, {static_cast<std::uint64_t>(participant_id), static_cast<std::uint64_t>(label),
                                    static_cast<std::uint64_t>(sample_index), cfg.distractor ? 2u : 1u});

  const auto tmpl = cfg.class_templates.contains(label) ? cfg.class_templates.at(label) : ClassTemplate{};
  const double delta = tmpl.delta_bins * uniform(rng, 1.0 - cfg.sample_extent_jitter, 1.0 + cfg.sample_extent_jitter);
  const double duration_frames = tmpl.duration_s * fr;
  const double start = uniform(rng, cfg.transition_start_range.first, cfg.transition_start_range.second);
  const double mid = start + 0.5 * duration_frames;
  const double tau = duration_frames / 8.0;
  const double c0 = uniform(rng, cfg.body_start_range.first, cfg.body_start_range.second);
  const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double breath_f = cfg.breathing_freq_hz * uniform(rng, 0.9, 1.1);

  Trajectory traj;
  traj.center_bin.resize(static_cast<std::size_t>(cols));
  for (int n = 0; n < cols; ++n) {
    const double breathing = cfg.breathing_amp_bins * std::sin(2.0 * std::numbers::pi * breath_f * n / fr + phase);
    const double motion = delta == 0.0 ? 0.0 : delta * logistic((n - mid) / tau);
    traj.center_bin[static_cast<std::size_t>(n)] = c0 + breathing + motion;
  }

  const auto body = detail::body_scatterers(cfg, rng);

  // Background activity: short limb bursts on one scatterer, no net shift.
  std::vector<std::vector<double>> limb(body.size(), std::vector<double>(static_cast<std::size_t>(cols), 0.0));
  if (label == SptClass::BG && cfg.bg_jitter_bins > 0.0) {
    const int bursts = uniform_int(rng, 1, 3);
    for (int b = 0; b < bursts; ++b) {
      const auto path = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(body.size()) - 1));
      const double amp = uniform(rng, -cfg.bg_jitter_bins, cfg.bg_jitter_bins);
      const int len = uniform_int(rng, static_cast<int>(0.5 * fr), static_cast<int>(1.5 * fr));
      const int at = uniform_int(rng, 0, cols - len);
      for (int k = 0; k < len; ++k)
        limb[path][static_cast<std::size_t>(at + k)] += amp * std::sin(std::numbers::pi * k / (len - 1));
    }
  }

  Matrix r = Matrix::Zero(rows, cols);
  for (std::size_t i = 0; i < body.size(); ++i) {
    for (int n = 0; n < cols; ++n) {
      const double c = traj.center_bin[static_cast<std::size_t>(n)] + body[i].offset_bins + limb[i][static_cast<std::size_t>(n)];
      require(c >= 0.0 && c <= rows - 1, ErrorCode::OutOfRange, "trajectory leaves the range axis");
      const int lo = std::max(0, static_cast<int>(std::floor(c - 6.0 * cfg.pulse_width_bins)));
      const int hi = std::min(rows - 1, static_cast<int>(std::ceil(c + 6.0 * cfg.pulse_width_bins)));
      for (int m = lo; m <= hi; ++m) r(m, n) += body[i].amplitude * detail::gaussian_pulse(m - c, cfg.pulse_width_bins);
    }
  }

  if (cfg.clutter_amplitude > 0.0 || cfg.dc_offset_scale > 0.0) {
    for (int m = 0; m < rows; ++m) {
      const double level = normal(rng, 0.0, cfg.clutter_amplitude) + normal(rng, 0.0, cfg.dc_offset_scale);
      r.row(m).array() += level;
    }
  }

  if (cfg.distractor) {
    const auto& d = *cfg.distractor;
    const double dphase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    for (int n = 0; n < cols; ++n) {
      const double a = d.amplitude * std::sin(2.0 * std::numbers::pi * n / (d.period_s * fr) + dphase);
      for (int m = std::max(0, d.range_bin - 8); m <= std::min(rows - 1, d.range_bin + 8); ++m)
        r(m, n) += a * detail::gaussian_pulse(m - d.range_bin, cfg.pulse_width_bins);
    }
  }

  if (cfg.noise_sigma > 0.0)
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] += normal(rng, 0.0, cfg.noise_sigma);

  LabeledSample s;
  s.frames = std::move(r);
  s.label = label;
  s.participant_id = participant_id;
  s.session_id = cfg.distractor ? 2 : 1;
  return s;
}

/// Participant-specific configuration: pulse width, noise level, transition
/// timing, motion extent and distractor placement drawn from (seed, participant).
inline SimConfig participant_config(const SimConfig& base, int participant_id) {
  Rng rng = make_rng(base.rng_seed, {static_cast<std::uint64_t>(participant_id), 0x9a47});
  SimConfig cfg = base;
  cfg.pulse_width_bins *= uniform(rng, 0.8, 1.2);
  cfg.noise_sigma *= uniform(rng, 0.8, 1.2);
  const int shift = uniform_int(rng, -5, 5);
  cfg.transition_start_range.first = std::max(0, cfg.transition_start_range.first + shift);
  cfg.transition_start_range.second = std::max(cfg.transition_start_range.first, cfg.transition_start_range.second + shift);
  const double extent = uniform(rng, 1.0 - base.participant_extent_jitter, 1.0 + base.participant_extent_jitter);
  for (auto& [c, t] : cfg.class_templates) t.delta_bins *= extent;
  if (cfg.distractor) {
    auto& d = *cfg.distractor;
    d.range_bin = std::clamp(d.range_bin + uniform_int(rng, -d.bin_spread, d.bin_spread), 0,
                             cfg.radar.num_range_bins - 1);
  }
  return cfg;
}

inline std::vector<SptClass> classes_for(ClassMode mode) {
  std::vector<SptClass> v{SptClass::SUSI, SptClass::SUPR, SptClass::SISU, SptClass::PRSU};
  if (mode == ClassMode::Five) v.push_back(SptClass::BG);
  return v;
}

/// Balanced dataset of n_participants x per_class samples for every class of
/// the configured mode. Sample ids number the output sequentially from `first_id`.
inline std::vector<LabeledSample> synth_dataset(const SimConfig& cfg, int n_participants, int per_class,
                                                std::uint64_t first_id = 0) {
  require(n_participants > 0 && per_class > 0, ErrorCode::InvalidArgument, "counts must be positive");
  cfg.validate();
  std::vector<LabeledSample> out;
  const auto classes = classes_for(cfg.class_mode);
  out.reserve(static_cast<std::size_t>(n_participants) * per_class * classes.size());
  std::uint64_t id = first_id;
  for (int p = 0; p < n_participants; ++p) {
    const SimConfig pcfg = participant_config(cfg, p);
    for (auto c : classes)
      for (int k = 0; k < per_class; ++k) {
        auto s = synth_sample(pcfg, c, p, k);
        s.sample_id = id++;
        out.push_back(std::move(s));
      }
  }
  return out;
}

/// Static-room session 1 followed by a distractor session 2 for the same participants.
inline std::vector<LabeledSample> synth_two_session_dataset(const SimConfig& cfg, int n_participants, int per_class,
                                                            const Distractor& distractor) {
  SimConfig s1 = cfg;
  s1.distractor.reset();
  SimConfig s2 = cfg;
  s2.distractor = distractor;
  auto out = synth_dataset(s1, n_participants, per_class);
  auto second = synth_dataset(s2, n_participants, per_class, out.size());
  out.insert(out.end(), std::make_move_iterator(second.begin()), std::make_move_iterator(second.end()));
  return out;
}

}  // namespace spn::sim
