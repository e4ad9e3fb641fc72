#include "fbp/imageproc/image.hpp"

#include <algorithm>
#include <cmath>

namespace fbp::img {

double srgb_to_linear(double v) {
  if (v <= 0.04045) return v / 12.92;
  return std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
  if (v <= 0.0031308) return 12.92 * v;
  return 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

namespace {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

std::vector<Tap> taps(std::size_t src, std::size_t dst) {
  std::vector<Tap> out(dst);
  const double ratio = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t i = 0; i < dst; ++i) {
    double s = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const auto lo = static_cast<std::size_t>(std::floor(s));
    const std::size_t hi = std::min(lo + 1, src - 1);
    out[i] = {lo, hi, s - static_cast<double>(lo)};
  }
  return out;
}

}  // namespace

ImageRGB resize_bilinear(const ImageRGB& img, std::size_t w, std::size_t h) {
  if (w == 0 || h == 0) throw ArgumentError("resize_bilinear: target extents must be >= 1");
  if (w == img.width && h == img.height) return img;

  const auto tx = taps(img.width, w);
  const auto ty = taps(img.height, h);
  ImageRGB out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    const Tap& vy = ty[y];
    for (std::size_t x = 0; x < w; ++x) {
      const Tap& vx = tx[x];
      for (std::size_t c = 0; c < 3; ++c) {
        // lo + (hi - lo) * t keeps constant regions exactly constant.
        const double a = img.at(vx.lo, vy.lo, c), b = img.at(vx.hi, vy.lo, c);
        const double d = img.at(vx.lo, vy.hi, c), e = img.at(vx.hi, vy.hi, c);
        const double top = a + (b - a) * vx.frac;
        const double bot = d + (e - d) * vx.frac;
        out.at(x, y, c) = top + (bot - top) * vy.frac;
      }
    }
  }
  return out;
}

}  // namespace fbp::img
