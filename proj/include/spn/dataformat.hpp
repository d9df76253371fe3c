#pragma once

// Radar sample containers, the UWBF1 binary frame format, JSON dataset
// manifests and class balancing.

#include <spn/error.hpp>
#include <spn/matrix.hpp>
#include <spn/random.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace spn {

struct RadarConfig {
  double center_frequency_hz = 7.29e9;
  double prf_hz = 15.18e6;
  double sampling_frequency_hz = 23.32e9;
  double range_bin_step_m = 0.0514;
  int num_range_bins = 180;
  double frame_rate_hz = 10.0;
  int slow_time_len = 160;

  double detection_range_m() const { return range_bin_step_m * num_range_bins; }

  void validate() const {
    require(center_frequency_hz > 0 && prf_hz > 0 && sampling_frequency_hz > 0 && range_bin_step_m > 0 &&
                num_range_bins > 0 && frame_rate_hz > 0 && slow_time_len > 1,
            ErrorCode::InvalidArgument, "radar config fields must be positive");
  }

  bool operator==(const RadarConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const RadarConfig& c) {
  j = nlohmann::json{{"center_frequency_hz", c.center_frequency_hz},
                     {"prf_hz", c.prf_hz},
                     {"sampling_frequency_hz", c.sampling_frequency_hz},
                     {"range_bin_step_m", c.range_bin_step_m},
                     {"num_range_bins", c.num_range_bins},
                     {"frame_rate_hz", c.frame_rate_hz},
                     {"slow_time_len", c.slow_time_len}};
}

inline void from_json(const nlohmann::json& j, RadarConfig& c) {
  RadarConfig d;
  c.center_frequency_hz = j.value("center_frequency_hz", d.center_frequency_hz);
  c.prf_hz = j.value("prf_hz", d.prf_hz);
  c.sampling_frequency_hz = j.value("sampling_frequency_hz", d.sampling_frequency_hz);
  c.range_bin_step_m = j.value("range_bin_step_m", d.range_bin_step_m);
  c.num_range_bins = j.value("num_range_bins", d.num_range_bins);
  c.frame_rate_hz = j.value("frame_rate_hz", d.frame_rate_hz);
  c.slow_time_len = j.value("slow_time_len", d.slow_time_len);
}

enum class SptClass : int { SUSI = 0, SUPR = 1, SISU = 2, PRSU = 3, BG = 4 };

inline constexpr std::array<SptClass, 5> kAllClasses = {SptClass::SUSI, SptClass::SUPR, SptClass::SISU,
                                                        SptClass::PRSU, SptClass::BG};

inline std::string_view class_name(SptClass c) {
  switch (c) {
    case SptClass::SUSI: return "SUSI";
    case SptClass::SUPR: return "SUPR";
    case SptClass::SISU: return "SISU";
    case SptClass::PRSU: return "PRSU";
    case SptClass::BG: return "BG";
  }
  return "?";
}

inline SptClass parse_class(std::string_view s) {
  for (auto c : kAllClasses)
    if (class_name(c) == s) return c;
  fail(ErrorCode::BadFormat, "unknown class label '" + std::string(s) + "'");
}

/// 4 = postural transitions only, 5 = transitions plus background.
enum class ClassMode : int { Four = 4, Five = 5 };

inline int num_classes(ClassMode mode) { return static_cast<int>(mode); }

inline bool valid_in_mode(SptClass c, ClassMode mode) { return c != SptClass::BG || mode == ClassMode::Five; }

inline ClassMode class_mode_from_int(int n) {
  require(n == 4 || n == 5, ErrorCode::InvalidArgument, "class mode must be 4 or 5");
  return static_cast<ClassMode>(n);
}

struct LabeledSample {
  Matrix frames;
  SptClass label = SptClass::SUSI;
  int participant_id = 0;
  int session_id = 1;  // 1 = static room, 2 = moving distractor
  int dataset_id = 1;
  std::uint64_t sample_id = 0;  // provenance; augmented copies inherit it
};

// ---------------------------------------------------------------------------
// UWBF1 binary format
//   bytes 0-3  "UWBF"
//   byte  4    version (0x01)
//   bytes 5-8  u32 LE rows (M)
//   bytes 9-12 u32 LE cols (N)
//   then M*N f32 LE, row-major
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kUwbfMagic = {'U', 'W', 'B', 'F'};
inline constexpr std::uint8_t kUwbfVersion = 0x01;
inline constexpr std::size_t kUwbfHeaderBytes = 13;

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32_le(std::string& out, float f) { put_u32_le(out, std::bit_cast<std::uint32_t>(f)); }

inline float get_f32_le(const unsigned char* p) { return std::bit_cast<float>(get_u32_le(p)); }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::Io, "read failed for " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace detail

inline std::string encode_uwbf(const Matrix& frames) {
  require(frames.rows() > 0 && frames.cols() > 0, ErrorCode::InvalidArgument, "UWBF1 needs non-empty dimensions");
  constexpr auto kMax = static_cast<Eigen::Index>(std::numeric_limits<std::uint32_t>::max());
  require(frames.rows() <= kMax && frames.cols() <= kMax, ErrorCode::OutOfRange, "dimension exceeds u32");
  require(all_finite(frames), ErrorCode::NonFinite, "frame matrix has non-finite entries");

  std::string out;
  out.reserve(kUwbfHeaderBytes + static_cast<std::size_t>(frames.size()) * 4);
  out.append(kUwbfMagic.data(), kUwbfMagic.size());
  out.push_back(static_cast<char>(kUwbfVersion));
  detail::put_u32_le(out, static_cast<std::uint32_t>(frames.rows()));
  detail::put_u32_le(out, static_cast<std::uint32_t>(frames.cols()));
  for (Eigen::Index i = 0; i < frames.size(); ++i) detail::put_f32_le(out, static_cast<float>(frames.data()[i]));
  return out;
}

inline Matrix decode_uwbf(std::string_view bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kUwbfMagic.data(), 4) != 0)
    fail(ErrorCode::BadFormat, "missing UWBF magic");
  const auto version = static_cast<std::uint8_t>(bytes[4]);
  if (version != kUwbfVersion) fail(ErrorCode::BadFormat, "unsupported UWBF version " + std::to_string(version));
  if (bytes.size() < kUwbfHeaderBytes) fail(ErrorCode::Truncated, "header truncated");

  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t rows = detail::get_u32_le(p + 5);
  const std::uint64_t cols = detail::get_u32_le(p + 9);
  if (rows == 0 || cols == 0) fail(ErrorCode::BadFormat, "zero dimension in header");
  const std::uint64_t payload = rows * cols * 4;
  if (bytes.size() - kUwbfHeaderBytes < payload) fail(ErrorCode::Truncated, "payload truncated");
  if (bytes.size() - kUwbfHeaderBytes > payload) fail(ErrorCode::BadFormat, "trailing bytes after payload");

  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* q = p + kUwbfHeaderBytes;
  for (Eigen::Index i = 0; i < m.size(); ++i, q += 4) {
    const float f = detail::get_f32_le(q);
    if (!std::isfinite(f)) fail(ErrorCode::NonFinite, "non-finite value at flat index " + std::to_string(i));
    m.data()[i] = f;
  }
  return m;
}

inline void write_sample(const LabeledSample& sample, const std::filesystem::path& path) {
  detail::write_file(path, encode_uwbf(sample.frames));
}

/// Reads frames only; label and ids come from the manifest (see load_dataset).
inline LabeledSample read_sample(const std::filesystem::path& path) {
  LabeledSample s;
  s.frames = decode_uwbf(detail::read_file(path));
  return s;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string file;
  SptClass label = SptClass::SUSI;
  int participant = 0;
  int session = 1;
  int dataset = 1;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  RadarConfig radar_config;
  ClassMode class_mode = ClassMode::Four;

  void validate() const {
    radar_config.validate();
    std::set<std::string> seen;
    for (const auto& e : entries) {
      require(seen.insert(e.file).second, ErrorCode::BadFormat, "duplicate manifest path " + e.file);
      require(valid_in_mode(e.label, class_mode), ErrorCode::BadFormat,
              "label " + std::string(class_name(e.label)) + " not valid in 4-class mode");
      require(e.participant >= 0, ErrorCode::BadFormat, "negative participant id");
    }
  }

  bool operator==(const DatasetManifest&) const = default;
};

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries)
    entries.push_back({{"file", e.file},
                       {"label", std::string(class_name(e.label))},
                       {"participant", e.participant},
                       {"session", e.session},
                       {"dataset", e.dataset}});
  return {{"class_mode", num_classes(m.class_mode)}, {"radar_config", m.radar_config}, {"entries", entries}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    if (j.contains("radar_config")) m.radar_config = j.at("radar_config").get<RadarConfig>();
    m.class_mode = class_mode_from_int(j.value("class_mode", 4));
    for (const auto& e : j.at("entries")) {
      ManifestEntry me;
      me.file = e.at("file").get<std::string>();
      me.label = parse_class(e.at("label").get<std::string>());
      me.participant = e.at("participant").get<int>();
      me.session = e.value("session", 1);
      me.dataset = e.value("dataset", 1);
      m.entries.push_back(std::move(me));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::BadFormat, std::string("manifest: ") + ex.what());
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::InvalidArgument) fail(ErrorCode::BadFormat, ex.what());
    throw;
  }
  m.validate();
  return m;
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  m.validate();
  detail::write_file(path, manifest_to_json(m).dump(2) + "\n");
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& ex) {
    fail(ErrorCode::BadFormat, path.string() + ": " + ex.what());
  }
  return manifest_from_json(j);
}

/// Loads every manifest entry; relative paths resolve against the manifest's directory.
inline std::vector<LabeledSample> load_dataset(const DatasetManifest& m, const std::filesystem::path& base_dir) {
  std::vector<LabeledSample> out;
  out.reserve(m.entries.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    const std::filesystem::path file(e.file);
    const std::filesystem::path p = file.is_absolute() ? file : base_dir / file;
    LabeledSample s = read_sample(p);
    require(s.frames.rows() == m.radar_config.num_range_bins && s.frames.cols() == m.radar_config.slow_time_len,
            ErrorCode::BadFormat, e.file + ": dimensions do not match radar_config");
    s.label = e.label;
    s.participant_id = e.participant;
    s.session_id = e.session;
    s.dataset_id = e.dataset;
    s.sample_id = i;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Class balancing
// ---------------------------------------------------------------------------

inline std::map<SptClass, std::size_t> class_histogram(const std::vector<LabeledSample>& data) {
  std::map<SptClass, std::size_t> h;
  for (const auto& s : data) ++h[s.label];
  return h;
}

/// Randomly undersamples every class down to the smallest class count.
/// Selected samples keep their input order.
inline std::vector<LabeledSample> balance_classes(const std::vector<LabeledSample>& data, std::uint64_t seed) {
  require(!data.empty(), ErrorCode::InsufficientData, "balance_classes on empty dataset");
  std::map<SptClass, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data[i].label].push_back(i);
  if (by_class.size() == 1) return data;

  std::size_t target = data.size();
  for (const auto& [c, idx] : by_class) target = std::min(target, idx.size());

  Rng rng = make_rng(seed, {0xba1a});
  std::vector<char> keep(data.size(), 0);
  for (auto& [c, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < target; ++k) keep[idx[k]] = 1;
  }
  std::vector<LabeledSample> out;
  out.reserve(target * by_class.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    if (keep[i]) out.push_back(data[i]);
  return out;
}

}  // namespace spn
