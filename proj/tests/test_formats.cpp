// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <limits>

#include "fds/common.hpp"
#include "fds/flow.hpp"
#include "fds/gaussian_field.hpp"
#include "fds/image_io.hpp"
#include "test_support.hpp"

using namespace fds;
using namespace fds::test;

namespace {

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an fds::Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("PPM round-trip is exact after 8-bit quantization") {
  const auto dir = temp_dir("ppm");
  Philox rng(derive_key(3, {}), 0);
  const Image img = quantize_8bit(random_image(rng, 7, 5, 3, 0.0, 1.0));
  write_ppm(img, dir / "a.ppm");
  const Image back = read_ppm(dir / "a.ppm");
  CHECK(back == img);
  write_ppm(back, dir / "b.ppm");
  CHECK(slurp(dir / "a.ppm") == slurp(dir / "b.ppm"));
  CHECK(slurp(dir / "a.ppm").size() == std::string("P6\n7 5\n255\n").size() + 7 * 5 * 3);
}

TEST_CASE("PFM round-trip is exact and stores rows bottom-to-top") {
  const auto dir = temp_dir("pfm");
  Image img(3, 2, 1);
  img(0, 0) = 1.0;  // top-left
  img(2, 1) = 0.1f;
  img(1, 1) = std::numeric_limits<double>::infinity();
  write_pfm(img, dir / "d.pfm");
  const Image back = read_pfm(dir / "d.pfm");
  CHECK(back == img);
  const auto bytes = slurp(dir / "d.pfm");
  const std::string header = "Pf\n3 2\n-1.0\n";
  REQUIRE(bytes.size() == header.size() + 6 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
  float first_stored;
  std::memcpy(&first_stored, bytes.data() + header.size(), 4);
  CHECK(first_stored == 0.0f);  // bottom row first
  float top_left;
  std::memcpy(&top_left, bytes.data() + header.size() + 3 * 4, 4);
  CHECK(top_left == 1.0f);

  Philox rng(derive_key(4, {}), 0);
  const Image rgb = quantize_float(random_image(rng, 4, 3, 3, -5.0, 5.0));
  write_pfm(rgb, dir / "c.pfm");
  CHECK(read_pfm(dir / "c.pfm") == rgb);
}

TEST_CASE("image readers reject bad files") {
  const auto dir = temp_dir("bad_images");
  std::ofstream(dir / "x.ppm") << "P3\n1 1\n255\n0 0 0\n";
  CHECK(code_of([&] { read_ppm(dir / "x.ppm"); }) == ErrorCode::BadMagic);
  std::ofstream(dir / "t.ppm", std::ios::binary) << "P6\n2 2\n255\nabc";
  CHECK(code_of([&] { read_ppm(dir / "t.ppm"); }) == ErrorCode::TruncatedFile);
  CHECK(code_of([&] { read_pfm(dir / "missing.pfm"); }) == ErrorCode::FileNotFound);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  Philox rng(derive_key(6, {}), 0);
  const GaussianCloud cloud = random_cloud(rng, 37, make_camera(16, 16, 16.0));
  const auto bytes = encode_checkpoint(cloud);
  CHECK(bytes.size() == 16 + 37 * 14 * 4);
  CHECK(std::memcmp(bytes.data(), "FDSGC\0", 6) == 0);
  const GaussianCloud once = decode_checkpoint(bytes);
  CHECK(encode_checkpoint(once) == bytes);
  CHECK(decode_checkpoint(encode_checkpoint(once)) == once);

  const auto dir = temp_dir("ckpt");
  save_checkpoint(once, dir / "c.fdsgc");
  CHECK(load_checkpoint(dir / "c.fdsgc") == once);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK(code_of([&] { decode_checkpoint(bad); }) == ErrorCode::BadMagic);
  auto short_bytes = bytes;
  short_bytes.resize(bytes.size() - 3);
  CHECK(code_of([&] { decode_checkpoint(short_bytes); }) == ErrorCode::TruncatedFile);
  CHECK(code_of([&] { decode_checkpoint(std::vector<std::uint8_t>(10)); }) == ErrorCode::TruncatedFile);
}

TEST_CASE(".flo round-trip is bit-exact including invalid pixels") {
  FlowField f(2, 1);
  f.du = {1.5, -0.25};
  f.dv = {2.0, 0.0};
  f.valid = {1, 0};
  const FlowField q = quantize_float(f);
  const auto bytes = encode_flo(q);
  CHECK(bytes.size() == 28);
  float magic;
  std::memcpy(&magic, bytes.data(), 4);
  CHECK(magic == 202021.25f);
  const FlowField back = decode_flo(bytes);
  CHECK(back.valid == q.valid);
  CHECK(back.du[0] == 1.5);
  CHECK(back.dv[0] == 2.0);
  CHECK(encode_flo(back) == bytes);
  float stored_invalid;
  std::memcpy(&stored_invalid, bytes.data() + 12 + 8, 4);
  CHECK(stored_invalid == kFloInvalid);

  const auto dir = temp_dir("flo");
  Philox rng(derive_key(7, {}), 0);
  FlowField big(9, 4);
  for (std::size_t i = 0; i < big.size(); ++i) {
    big.du[i] = rng.normal() * 10;
    big.dv[i] = rng.normal() * 10;
    big.valid[i] = rng.uniform() < 0.8;
  }
  big = quantize_float(big);
  write_flo(big, dir / "f.flo");
  const FlowField read = read_flo(dir / "f.flo");
  CHECK(read.valid == big.valid);
  for (std::size_t i = 0; i < big.size(); ++i)
    if (big.valid[i]) {
      CHECK(read.du[i] == big.du[i]);
      CHECK(read.dv[i] == big.dv[i]);
    }

  auto bad = bytes;
  bad[0] ^= 0xff;
  CHECK(code_of([&] { decode_flo(bad); }) == ErrorCode::BadMagic);
  auto cut = bytes;
  cut.resize(20);
  CHECK(code_of([&] { decode_flo(cut); }) == ErrorCode::TruncatedFile);
}

TEST_CASE("turbo colormap endpoints") {
  const auto lo = turbo_rgb8(0.0);
  const auto hi = turbo_rgb8(1.0);
  CHECK(lo[0] + lo[1] + lo[2] < 120);  // dark at the low end
  CHECK(hi[0] > hi[2]);
  const auto mid = turbo_rgb8(0.5);
  CHECK(mid[1] > 180);  // bright green-yellow in the middle
  CHECK(turbo_rgb8(-3.0) == lo);
  CHECK(turbo_rgb8(7.0) == hi);
}
