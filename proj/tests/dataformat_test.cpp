#include <spn/dataformat.hpp>

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace spn {
namespace {

using test::error_code_of;

LabeledSample make_sample(SptClass label, int participant, double value) {
  LabeledSample s;
  s.frames = Matrix::Constant(3, 4, value);
  s.label = label;
  s.participant_id = participant;
  return s;
}

TEST(Uwbf, SmallMatrixRoundTrip) {
  const auto dir = test::scratch_dir("uwbf_small");
  LabeledSample s;
  s.frames = from_rows({{1, 2, 3}, {4, 5, 6}});
  write_sample(s, dir / "a.uwbf");

  EXPECT_EQ(std::filesystem::file_size(dir / "a.uwbf"), kUwbfHeaderBytes + 24);
  EXPECT_EQ(read_sample(dir / "a.uwbf").frames, s.frames);
}

TEST(Uwbf, FullSizePayload) {
  Rng rng(3);
  const Matrix m = test::random_matrix(180, 160, rng);
  const std::string bytes = encode_uwbf(m);
  EXPECT_EQ(bytes.size() - kUwbfHeaderBytes, 115200u);
  EXPECT_EQ(bytes.substr(0, 4), "UWBF");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 0x01);
}

TEST(Uwbf, ByteExactBothWays) {
  Rng rng(4);
  const Matrix m = test::random_matrix(7, 5, rng, -1e3, 1e3).cast<float>().cast<double>();
  const std::string bytes = encode_uwbf(m);
  const Matrix back = decode_uwbf(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(encode_uwbf(back), bytes);
}

TEST(Uwbf, RejectsEmptyDimension) {
  EXPECT_EQ(error_code_of([] { encode_uwbf(Matrix(0, 4)); }), ErrorCode::InvalidArgument);
}

TEST(Uwbf, RejectsNonFinite) {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(error_code_of([&] { encode_uwbf(m); }), ErrorCode::NonFinite);

  std::string bytes = encode_uwbf(Matrix::Zero(2, 2));
  const std::uint32_t nan_bits = 0x7fc00000u;
  std::memcpy(bytes.data() + kUwbfHeaderBytes, &nan_bits, 4);
  EXPECT_EQ(error_code_of([&] { decode_uwbf(bytes); }), ErrorCode::NonFinite);
}

TEST(Uwbf, BadMagic) {
  std::string bytes = encode_uwbf(Matrix::Ones(2, 2));
  bytes[0] = 'X';
  EXPECT_EQ(error_code_of([&] { decode_uwbf(bytes); }), ErrorCode::BadFormat);
}

TEST(Uwbf, WrongVersion) {
  std::string bytes = encode_uwbf(Matrix::Ones(2, 2));
  bytes[4] = 0x02;
  EXPECT_EQ(error_code_of([&] { decode_uwbf(bytes); }), ErrorCode::BadFormat);
}

TEST(Uwbf, TruncatedPayload) {
  const std::string bytes = encode_uwbf(Matrix::Ones(4, 4));
  EXPECT_EQ(error_code_of([&] { decode_uwbf(bytes.substr(0, bytes.size() - 6)); }), ErrorCode::Truncated);
  EXPECT_EQ(error_code_of([&] { decode_uwbf(bytes.substr(0, 8)); }), ErrorCode::Truncated);
}

TEST(Uwbf, TrailingBytes) {
  EXPECT_EQ(error_code_of([] { decode_uwbf(encode_uwbf(Matrix::Ones(2, 2)) + "x"); }), ErrorCode::BadFormat);
}

TEST(Uwbf, MissingFileIsIoError) {
  const auto dir = test::scratch_dir("uwbf_missing");
  EXPECT_EQ(error_code_of([&] { read_sample(dir / "nope.uwbf"); }), ErrorCode::Io);
}

TEST(Manifest, JsonRoundTrip) {
  DatasetManifest m;
  m.class_mode = ClassMode::Five;
  m.entries = {{"a.uwbf", SptClass::SUSI, 0, 1, 1}, {"b.uwbf", SptClass::BG, 3, 2, 2}};
  EXPECT_EQ(manifest_from_json(manifest_to_json(m)), m);
}

TEST(Manifest, RejectsUnknownLabel) {
  auto j = manifest_to_json(DatasetManifest{{{"a.uwbf", SptClass::SUSI, 0, 1, 1}}, {}, ClassMode::Four});
  j["entries"][0]["label"] = "SLEEP";
  EXPECT_EQ(error_code_of([&] { manifest_from_json(j); }), ErrorCode::BadFormat);
}

TEST(Manifest, RejectsDuplicatePaths) {
  DatasetManifest m;
  m.entries = {{"a.uwbf", SptClass::SUSI, 0, 1, 1}, {"a.uwbf", SptClass::SUPR, 0, 1, 1}};
  EXPECT_EQ(error_code_of([&] { m.validate(); }), ErrorCode::BadFormat);
}

TEST(Manifest, BackgroundNeedsFiveClassMode) {
  DatasetManifest m;
  m.entries = {{"a.uwbf", SptClass::BG, 0, 1, 1}};
  EXPECT_EQ(error_code_of([&] { m.validate(); }), ErrorCode::BadFormat);
}

TEST(Manifest, LoadDatasetResolvesRelativePaths) {
  const auto dir = test::scratch_dir("manifest_load");
  RadarConfig rc;
  rc.num_range_bins = 3;
  rc.slow_time_len = 4;
  DatasetManifest m;
  m.radar_config = rc;
  for (int i = 0; i < 3; ++i) {
    const auto s = make_sample(SptClass::SISU, i, i + 0.5);
    const std::string file = "s" + std::to_string(i) + ".uwbf";
    write_sample(s, dir / file);
    m.entries.push_back({file, SptClass::SISU, i, 2, 1});
  }
  save_manifest(m, dir / "manifest.json");

  const auto loaded = load_manifest(dir / "manifest.json");
  EXPECT_EQ(loaded, m);
  const auto data = load_dataset(loaded, dir);
  ASSERT_EQ(data.size(), 3u);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data[i].participant_id, static_cast<int>(i));
    EXPECT_EQ(data[i].session_id, 2);
    EXPECT_EQ(data[i].sample_id, i);
    EXPECT_DOUBLE_EQ(data[i].frames(2, 3), i + 0.5);
  }
}

TEST(Manifest, DimensionMismatchRejected) {
  const auto dir = test::scratch_dir("manifest_dims");
  write_sample(make_sample(SptClass::SUSI, 0, 1.0), dir / "a.uwbf");
  DatasetManifest m;
  m.entries = {{"a.uwbf", SptClass::SUSI, 0, 1, 1}};
  EXPECT_EQ(error_code_of([&] { load_dataset(m, dir); }), ErrorCode::BadFormat);
}

std::vector<LabeledSample> unbalanced() {
  std::vector<LabeledSample> data;
  int id = 0;
  for (auto [c, n] : {std::pair{SptClass::SUSI, 10}, {SptClass::SISU, 10}, {SptClass::SUPR, 5}, {SptClass::PRSU, 5}})
    for (int k = 0; k < n; ++k) {
      auto s = make_sample(c, k % 3, 0.0);
      s.sample_id = static_cast<std::uint64_t>(id++);
      data.push_back(s);
    }
  return data;
}

std::vector<std::uint64_t> ids(const std::vector<LabeledSample>& data) {
  std::vector<std::uint64_t> out;
  for (const auto& s : data) out.push_back(s.sample_id);
  return out;
}

TEST(Balance, UndersamplesToSmallestClass) {
  const auto out = balance_classes(unbalanced(), 1);
  const auto h = class_histogram(out);
  ASSERT_EQ(h.size(), 4u);
  for (const auto& [c, n] : h) EXPECT_EQ(n, 5u) << class_name(c);
}

TEST(Balance, OutputIsOrderedSubset) {
  const auto in = unbalanced();
  const auto out = ids(balance_classes(in, 9));
  EXPECT_TRUE(std::is_sorted(out.begin(), out.end()));
  for (auto id : out) EXPECT_LT(id, in.size());
  EXPECT_EQ(std::set<std::uint64_t>(out.begin(), out.end()).size(), out.size());
}

TEST(Balance, AlreadyBalancedUnchanged) {
  auto data = unbalanced();
  data = balance_classes(data, 1);
  EXPECT_EQ(ids(balance_classes(data, 5)), ids(data));
}

TEST(Balance, SingleClassUnchanged) {
  std::vector<LabeledSample> data(4, make_sample(SptClass::SUPR, 0, 1.0));
  EXPECT_EQ(balance_classes(data, 0).size(), 4u);
}

TEST(Balance, SeedDeterminism) {
  const auto in = unbalanced();
  EXPECT_EQ(ids(balance_classes(in, 42)), ids(balance_classes(in, 42)));
  bool any_differs = false;
  for (std::uint64_t s = 43; s < 48; ++s) any_differs |= ids(balance_classes(in, s)) != ids(balance_classes(in, 42));
  EXPECT_TRUE(any_differs);
}

TEST(Balance, EmptyRejected) {
  EXPECT_EQ(error_code_of([] { balance_classes({}, 0); }), ErrorCode::InsufficientData);
}

}  // namespace
}  // namespace spn
