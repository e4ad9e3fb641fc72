#pragma once

#include <array>

#include "fbp/imageproc/image.hpp"

namespace fbp::img {

// Per-pixel conversion between linear sRGB primaries and CIELAB under the
// D65 white point (2 degree observer). The white point is taken as the
// XYZ image of linear (1,1,1), so white maps to exactly neutral.
std::array<double, 3> linear_rgb_to_lab(double r, double g, double b);
std::array<double, 3> lab_to_linear_rgb(double L, double a, double b);

ImageLAB srgb_to_lab(const ImageRGB& img);
ImageRGB lab_to_srgb(const ImageLAB& lab);

}  // namespace fbp::img
