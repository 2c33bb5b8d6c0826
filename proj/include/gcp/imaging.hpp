#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gcp/raster.hpp"

namespace gcp {

// PNG/JPEG decode and PNG encode. Decoding is format-sniffed; encoding always
// produces PNG with fixed parameters so repeated runs are byte-identical.
RgbImage read_rgb(const std::filesystem::path& path);
GrayImage read_gray(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_png(const GrayImage& image);
RgbImage decode_rgb(std::span<const std::uint8_t> bytes);

RgbImage resize_bilinear(const RgbImage& image, Size size);
BinaryMask resize_nearest(const BinaryMask& mask, Size size);

} // namespace gcp
