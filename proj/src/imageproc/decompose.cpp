#include "fbp/imageproc/decompose.hpp"

#include "fbp/imageproc/color.hpp"

namespace fbp::img {

LightnessSplit split_lightness(const Tensor<double>& L, const WlsParams& p) {
  LightnessSplit s{L, wls_base(L, p), {}};
  s.detail = sub(s.L, s.base);
  return s;
}

FaceChannels decompose(const ImageRGB& img, const WlsParams& p, std::size_t out_size, LightnessSplit* raw) {
  if (out_size == 0) throw ArgumentError("decompose: out_size must be >= 1");
  const ImageRGB sized = resize_bilinear(img, out_size, out_size);
  const ImageLAB lab = srgb_to_lab(sized);
  const std::size_t S = out_size, n = S * S;

  FaceChannels ch;
  ch.size = S;
  ch.rgb = Tensor<double>({3, S, S});
  ch.a = Tensor<double>({1, S, S});
  ch.b = Tensor<double>({1, S, S});
  Tensor<double> L({1, S, S});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) ch.rgb[c * n + i] = sized.pixels[3 * i + c] * ch.scales.rgb;
    L[i] = lab.pixels[3 * i];
    ch.a[i] = lab.pixels[3 * i + 1] * ch.scales.ab;
    ch.b[i] = lab.pixels[3 * i + 2] * ch.scales.ab;
  }

  LightnessSplit split = split_lightness(L, p);
  ch.base = scale(split.base, ch.scales.lightness);
  ch.detail = scale(split.detail, ch.scales.lightness);
  if (raw) *raw = std::move(split);
  return ch;
}

}  // namespace fbp::img
