// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "fds/image.hpp"

namespace fds {

// Binary PPM (P6, maxval 255). Values are quantized as round(255 * clamp(v)).
void write_ppm(const Image& rgb, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

// PFM, little-endian (scale -1.0), rows stored bottom-to-top as the format
// prescribes. One channel ("Pf") or three ("PF").
void write_pfm(const Image& image, const std::filesystem::path& path);
Image read_pfm(const std::filesystem::path& path);

/// Rounds every sample to what an 8-bit PPM stores, so in-memory images can
/// match their on-disk counterpart exactly.
Image quantize_8bit(const Image& image);
/// Rounds every sample to float32.
Image quantize_float(const Image& image);

/// Turbo colormap, fixed 256-entry 8-bit table.
std::array<std::uint8_t, 3> turbo_rgb8(double t);
/// Maps a one-channel image to RGB through the turbo table over [0, vmax];
/// pixels with mask == 0 (when given) are black.
Image colorize_turbo(const Image& scalar, double vmax, const Image* mask = nullptr);

}  // namespace fds
