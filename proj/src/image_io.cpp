// SPDX-License-Identifier: Apache-2.0
#include "fds/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fds/common.hpp"

namespace fds {
namespace {

static_assert(std::endian::native == std::endian::little, "PFM/flo writers assume little-endian host");

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FileNotFound, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& path, const std::string& header,
               const void* payload, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(bytes));
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

// Netpbm-style header tokenizer: whitespace-separated tokens, '#' comments.
class HeaderReader {
 public:
  HeaderReader(const std::vector<char>& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  std::string token() {
    skip_space();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      out.push_back(bytes_[pos_++]);
    if (out.empty()) fail(ErrorCode::TruncatedFile, "truncated header in " + path_.string());
    return out;
  }

  int integer() {
    const std::string t = token();
    try {
      std::size_t used = 0;
      const int v = std::stoi(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      fail(ErrorCode::Validation, "bad integer '" + t + "' in " + path_.string());
    }
  }

  // Consumes exactly one whitespace byte after the last header token.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size()) fail(ErrorCode::TruncatedFile, "no payload in " + path_.string());
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<char>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_ppm(const Image& rgb, const std::filesystem::path& path) {
  if (rgb.channels() != 3) fail(ErrorCode::ShapeMismatch, "PPM needs 3 channels");
  std::vector<std::uint8_t> bytes(rgb.data().size());
  std::transform(rgb.data().begin(), rgb.data().end(), bytes.begin(), to_byte);
  const std::string header =
      "P6\n" + std::to_string(rgb.width()) + " " + std::to_string(rgb.height()) + "\n255\n";
  write_all(path, header, bytes.data(), bytes.size());
}

Image read_ppm(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  HeaderReader header(bytes, path);
  if (header.token() != "P6") fail(ErrorCode::BadMagic, path.string() + " is not a binary PPM");
  const int width = header.integer();
  const int height = header.integer();
  const int maxval = header.integer();
  if (width < 1 || height < 1 || maxval != 255)
    fail(ErrorCode::Validation, "unsupported PPM geometry in " + path.string());
  const std::size_t offset = header.payload_offset();
  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() < offset + need) fail(ErrorCode::TruncatedFile, path.string());
  Image out(width, height, 3);
  auto data = out.data();
  for (std::size_t i = 0; i < need; ++i)
    data[i] = static_cast<std::uint8_t>(bytes[offset + i]) / 255.0;
  return out;
}

void write_pfm(const Image& image, const std::filesystem::path& path) {
  if (image.channels() != 1 && image.channels() != 3)
    fail(ErrorCode::ShapeMismatch, "PFM needs 1 or 3 channels");
  const int w = image.width(), h = image.height(), c = image.channels();
  std::vector<float> payload(image.data().size());
  std::size_t k = 0;
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) payload[k++] = static_cast<float>(image(x, y, ch));
  const std::string header = std::string(c == 3 ? "PF" : "Pf") + "\n" + std::to_string(w) + " " +
                             std::to_string(h) + "\n-1.0\n";
  write_all(path, header, payload.data(), payload.size() * sizeof(float));
}

Image read_pfm(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  HeaderReader header(bytes, path);
  const std::string magic = header.token();
  int channels = 0;
  if (magic == "PF") channels = 3;
  else if (magic == "Pf") channels = 1;
  else fail(ErrorCode::BadMagic, path.string() + " is not a PFM");
  const int width = header.integer();
  const int height = header.integer();
  const std::string scale = header.token();
  if (width < 1 || height < 1) fail(ErrorCode::Validation, "bad PFM size in " + path.string());
  if (std::stod(scale) >= 0.0)
    fail(ErrorCode::Validation, "big-endian PFM not supported: " + path.string());
  const std::size_t offset = header.payload_offset();
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() < offset + count * sizeof(float)) fail(ErrorCode::TruncatedFile, path.string());
  Image out(width, height, channels);
  std::size_t k = 0;
  for (int y = height - 1; y >= 0; --y)
    for (int x = 0; x < width; ++x)
      for (int ch = 0; ch < channels; ++ch) {
        float v;
        std::memcpy(&v, bytes.data() + offset + 4 * k++, sizeof(float));
        out(x, y, ch) = v;
      }
  return out;
}

Image quantize_8bit(const Image& image) {
  Image out = image;
  for (double& v : out.data()) v = to_byte(v) / 255.0;
  return out;
}

Image quantize_float(const Image& image) {
  Image out = image;
  for (double& v : out.data()) v = static_cast<float>(v);
  return out;
}

std::array<std::uint8_t, 3> turbo_rgb8(double t) {
  // Polynomial fit of the turbo colormap, tabulated once at 8 bits.
  static const auto table = [] {
    std::array<std::array<std::uint8_t, 3>, 256> tab{};
    for (int i = 0; i < 256; ++i) {
      const double x = i / 255.0;
      const double x2 = x * x, x3 = x2 * x, x4 = x3 * x, x5 = x4 * x;
      const double r = 0.13572138 + 4.61539260 * x - 42.66032258 * x2 + 132.13108234 * x3 -
                       152.94239396 * x4 + 59.28637943 * x5;
      const double g = 0.09140261 + 2.19418839 * x + 4.84296658 * x2 - 14.18503333 * x3 +
                       4.27729857 * x4 + 2.82956604 * x5;
      const double b = 0.10667330 + 12.64194608 * x - 60.58204836 * x2 + 110.36276771 * x3 -
                       89.90310912 * x4 + 27.34824973 * x5;
      tab[i] = {to_byte(r), to_byte(g), to_byte(b)};
    }
    return tab;
  }();
  const double clamped = std::isfinite(t) ? std::clamp(t, 0.0, 1.0) : 0.0;
  return table[static_cast<std::size_t>(std::lround(clamped * 255.0))];
}

Image colorize_turbo(const Image& scalar, double vmax, const Image* mask) {
  Image out(scalar.width(), scalar.height(), 3);
  const double scale = vmax > 0.0 ? 1.0 / vmax : 0.0;
  for (int y = 0; y < scalar.height(); ++y)
    for (int x = 0; x < scalar.width(); ++x) {
      if (mask && (*mask)(x, y) == 0.0) continue;
      const auto rgb = turbo_rgb8(scalar(x, y) * scale);
      for (int c = 0; c < 3; ++c) out(x, y, c) = rgb[c] / 255.0;
    }
  return out;
}

}  // namespace fds
