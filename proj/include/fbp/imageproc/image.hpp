#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "fbp/error.hpp"

namespace fbp::img {

// Linear-light RGB, components in [0,1], interleaved row-major.
struct ImageRGB {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  ImageRGB() = default;
  ImageRGB(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0.0) {
    if (w == 0 || h == 0) throw ArgumentError("image extents must be >= 1");
  }

  double& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  double at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }

  friend bool operator==(const ImageRGB&, const ImageRGB&) = default;
};

// CIELAB (D65, 2 degree observer), interleaved (L, a, b).
struct ImageLAB {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  ImageLAB() = default;
  ImageLAB(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0.0) {}

  double& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  double at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }
};

// sRGB electro-optical transfer function and its inverse (IEC 61966-2-1).
double srgb_to_linear(double encoded);
double linear_to_srgb(double linear);

// Bilinear resampling with pixel-center alignment and edge clamping. Equal
// dimensions return an exact copy.
ImageRGB resize_bilinear(const ImageRGB& img, std::size_t w, std::size_t h);

}  // namespace fbp::img
