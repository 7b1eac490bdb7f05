// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fds/common.hpp"
#include "fds/gaussian_field.hpp"

namespace fds {
namespace {

constexpr char kMagic[6] = {'F', 'D', 'S', 'G', 'C', '\0'};
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kRecordBytes = kParamsPerGaussian * sizeof(float);

static_assert(std::endian::native == std::endian::little, "checkpoint codec assumes little-endian");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const GaussianCloud& cloud) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + cloud.size() * kRecordBytes);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put<std::uint16_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, cloud.size());
  for (const auto& g : cloud.points())
    for (int k = 0; k < kParamsPerGaussian; ++k) put<float>(out, static_cast<float>(param(g, k)));
  return out;
}

GaussianCloud decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) fail(ErrorCode::TruncatedFile, "checkpoint header is truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    fail(ErrorCode::BadMagic, "not an FDSGC checkpoint");
  const auto version = get<std::uint16_t>(bytes, 6);
  if (version != kCheckpointVersion)
    fail(ErrorCode::Validation, "unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint64_t>(bytes, 8);
  if (count > (bytes.size() - kHeaderBytes) / kRecordBytes ||
      bytes.size() != kHeaderBytes + count * kRecordBytes)
    fail(ErrorCode::TruncatedFile, "checkpoint payload does not match its Gaussian count");
  std::vector<GaussianPoint> points(count);
  std::size_t offset = kHeaderBytes;
  for (auto& g : points)
    for (int k = 0; k < kParamsPerGaussian; ++k, offset += sizeof(float))
      param(g, k) = get<float>(bytes, offset);
  return GaussianCloud(std::move(points));
}

void save_checkpoint(const GaussianCloud& cloud, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

GaussianCloud load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FileNotFound, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace fds
