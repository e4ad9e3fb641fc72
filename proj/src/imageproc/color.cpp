#include "fbp/imageproc/color.hpp"

#include <algorithm>
#include <cmath>

namespace fbp::img {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

constexpr Mat3 kRgbToXyz{{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

Mat3 invert(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 r{};
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return r;
}

const Mat3& xyz_to_rgb() {
  static const Mat3 m = invert(kRgbToXyz);
  return m;
}

std::array<double, 3> white() {
  std::array<double, 3> w{};
  for (int i = 0; i < 3; ++i) w[i] = kRgbToXyz[i][0] + kRgbToXyz[i][1] + kRgbToXyz[i][2];
  return w;
}

constexpr double kDelta = 6.0 / 29.0;

double lab_f(double t) {
  if (t > kDelta * kDelta * kDelta) return std::cbrt(t);
  return t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double f) {
  if (f > kDelta) return f * f * f;
  return 3.0 * kDelta * kDelta * (f - 4.0 / 29.0);
}

}  // namespace

std::array<double, 3> linear_rgb_to_lab(double r, double g, double b) {
  static const auto wp = white();
  double xyz[3];
  for (int i = 0; i < 3; ++i) xyz[i] = kRgbToXyz[i][0] * r + kRgbToXyz[i][1] * g + kRgbToXyz[i][2] * b;
  const double fx = lab_f(xyz[0] / wp[0]);
  const double fy = lab_f(xyz[1] / wp[1]);
  const double fz = lab_f(xyz[2] / wp[2]);
  const double L = std::clamp(116.0 * fy - 16.0, 0.0, 100.0);
  return {L, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> lab_to_linear_rgb(double L, double a, double b) {
  static const auto wp = white();
  const double fy = (L + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - b / 200.0;
  const double xyz[3] = {wp[0] * lab_f_inv(fx), wp[1] * lab_f_inv(fy), wp[2] * lab_f_inv(fz)};
  const Mat3& m = xyz_to_rgb();
  std::array<double, 3> rgb{};
  for (int i = 0; i < 3; ++i) rgb[i] = m[i][0] * xyz[0] + m[i][1] * xyz[1] + m[i][2] * xyz[2];
  return rgb;
}

ImageLAB srgb_to_lab(const ImageRGB& img) {
  ImageLAB out(img.width, img.height);
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    const auto lab = linear_rgb_to_lab(img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]);
    std::copy(lab.begin(), lab.end(), out.pixels.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
  return out;
}

ImageRGB lab_to_srgb(const ImageLAB& lab) {
  ImageRGB out(lab.width, lab.height);
  for (std::size_t i = 0; i < lab.width * lab.height; ++i) {
    const auto rgb = lab_to_linear_rgb(lab.pixels[3 * i], lab.pixels[3 * i + 1], lab.pixels[3 * i + 2]);
    for (int c = 0; c < 3; ++c) out.pixels[3 * i + c] = std::clamp(rgb[c], 0.0, 1.0);
  }
  return out;
}

}  // namespace fbp::img
