#pragma once

// Weight file layout (all integers and reals little-endian):
//
//   offset  size  field
//   0       4     magic "LLCN"
//   4       4     u32 format version (1)
//   8       4     u32 layer count (7)
//   12      4     u32 channel width
//   16      4     u32 curve iterations N
//   20      4     u32 parameter count
//   24      4*P   f32 parameters, layer by layer: depthwise weights, depthwise
//                 biases, pointwise weights, pointwise biases

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lowlight/curve_net.hpp"

namespace lowlight {

inline constexpr std::array<char, 4> kCheckpointMagic{'L', 'L', 'C', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
  std::uint32_t version = 0;
  std::uint32_t layer_count = 0;
  std::uint32_t width = 0;
  std::uint32_t iterations = 0;
  std::uint32_t parameter_count = 0;
};

namespace checkpoint_detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

constexpr std::size_t kHeaderSize = 24;

inline CheckpointInfo parse_header(const std::vector<unsigned char>& bytes, const std::string& where) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kCheckpointMagic.data(), 4) != 0) {
    throw IoError(where + ": not a curve-net weight file");
  }
  CheckpointInfo info;
  info.version = get_u32(&bytes[4]);
  info.layer_count = get_u32(&bytes[8]);
  info.width = get_u32(&bytes[12]);
  info.iterations = get_u32(&bytes[16]);
  info.parameter_count = get_u32(&bytes[20]);
  if (info.version != kCheckpointVersion) {
    throw IoError(where + ": unsupported weight file version " + std::to_string(info.version));
  }
  if (info.layer_count != kCurveLayers || info.width < 1 || info.width > 4096 || info.iterations < 1) {
    throw IoError(where + ": invalid topology descriptor");
  }
  if (info.parameter_count != curve_parameter_count(static_cast<int>(info.width))) {
    throw IoError(where + ": parameter count does not match the declared topology");
  }
  if (bytes.size() != kHeaderSize + 4ull * info.parameter_count) {
    throw IoError(where + ": truncated or oversized weight payload");
  }
  return info;
}

inline std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace checkpoint_detail

/// Writes via a temporary file and rename so readers never see a partial file.
template <class T>
void save_checkpoint(const std::filesystem::path& path, const CurveNet<T>& net) {
  using namespace checkpoint_detail;
  std::vector<unsigned char> bytes(kCheckpointMagic.begin(), kCheckpointMagic.end());
  put_u32(bytes, kCheckpointVersion);
  put_u32(bytes, kCurveLayers);
  put_u32(bytes, static_cast<std::uint32_t>(net.width()));
  put_u32(bytes, static_cast<std::uint32_t>(net.iterations()));
  put_u32(bytes, static_cast<std::uint32_t>(net.parameter_count()));
  for (T v : net.params()) put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write weight file " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  return checkpoint_detail::parse_header(checkpoint_detail::read_all(path), path.string());
}

template <class T = float>
CurveNet<T> load_checkpoint(const std::filesystem::path& path) {
  using namespace checkpoint_detail;
  const auto bytes = read_all(path);
  const auto info = parse_header(bytes, path.string());
  CurveNet<T> net(static_cast<int>(info.width), static_cast<int>(info.iterations));
  auto params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] = static_cast<T>(std::bit_cast<float>(get_u32(&bytes[kHeaderSize + 4 * i])));
  }
  return net;
}

}  // namespace lowlight
