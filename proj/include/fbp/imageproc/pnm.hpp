#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fbp/imageproc/image.hpp"
#include "fbp/tensor.hpp"

namespace fbp::img {

// Raw 8-bit netpbm raster: channels is 1 (P5) or 3 (P6).
struct Raster8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> bytes;
};

Raster8 read_pnm(const std::filesystem::path& path);
void write_pnm(const Raster8& raster, const std::filesystem::path& path);

// Binary P6 (8-bit sRGB on disk) decoded to linear light.
ImageRGB read_image(const std::filesystem::path& path);

// Linear light re-encoded to 8-bit sRGB, P6.
void write_ppm(const ImageRGB& img, const std::filesystem::path& path);

// Maps [lo, hi] linearly onto [0, 255] with clamping and writes P5.
void write_pgm(const Tensor<double>& plane, const std::filesystem::path& path, double lo, double hi);

std::uint8_t quantize_unit(double v);

}  // namespace fbp::img
