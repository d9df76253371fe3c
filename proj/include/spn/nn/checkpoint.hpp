#pragma once

// Checkpoint layout:
//   "SPNW" | version u8 (0x01) | u32 LE json length | ModelSpec JSON | f32 LE parameters (declaration order)

#include <spn/dataformat.hpp>
#include <spn/error.hpp>
#include <spn/nn/model.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <string>

namespace spn::nn {

inline constexpr char kCheckpointMagic[4] = {'S', 'P', 'N', 'W'};
inline constexpr std::uint8_t kCheckpointVersion = 0x01;

template <typename T>
std::string encode_checkpoint(Network<T>& net) {
  const std::string spec = to_json(net.spec()).dump();
  std::string out(kCheckpointMagic, 4);
  out.push_back(static_cast<char>(kCheckpointVersion));
  spn::detail::put_u32_le(out, static_cast<std::uint32_t>(spec.size()));
  out += spec;
  for (T w : net.get_weights()) spn::detail::put_f32_le(out, static_cast<float>(w));
  return out;
}

template <typename T = float>
Network<T> decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 9 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    fail(ErrorCode::BadFormat, "missing SPNW magic");
  if (static_cast<std::uint8_t>(bytes[4]) != kCheckpointVersion) fail(ErrorCode::BadFormat, "unsupported checkpoint version");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t len = spn::detail::get_u32_le(p + 5);
  if (bytes.size() < 9 + len) fail(ErrorCode::Truncated, "checkpoint spec truncated");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.substr(9, len));
  } catch (const nlohmann::json::parse_error& ex) {
    fail(ErrorCode::BadFormat, std::string("checkpoint spec: ") + ex.what());
  }
  auto net = build_model<T>(model_spec_from_json(j));
  const std::size_t count = net.parameter_count();
  const std::size_t blob = bytes.size() - 9 - len;
  if (blob < count * 4) fail(ErrorCode::Truncated, "checkpoint parameters truncated");
  if (blob > count * 4) fail(ErrorCode::BadFormat, "trailing bytes in checkpoint");
  std::vector<T> w(count);
  const unsigned char* q = p + 9 + len;
  for (std::size_t i = 0; i < count; ++i, q += 4) w[i] = static_cast<T>(spn::detail::get_f32_le(q));
  net.set_weights(w);
  return net;
}

template <typename T>
void save_checkpoint(Network<T>& net, const std::filesystem::path& path) {
  spn::detail::write_file(path, encode_checkpoint(net));
}

template <typename T = float>
Network<T> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint<T>(spn::detail::read_file(path));
}

}  // namespace spn::nn
