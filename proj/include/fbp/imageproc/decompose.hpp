#pragma once

#include <cstddef>

#include "fbp/imageproc/image.hpp"
#include "fbp/imageproc/wls.hpp"
#include "fbp/tensor.hpp"

namespace fbp::img {

// Multipliers that bring each plane family into a comparable range.
struct ChannelScales {
  double rgb = 1.0;
  double ab = 1.0 / 110.0;
  double lightness = 1.0 / 100.0;  // applies to base and detail
};

// Facial channels of one image at network resolution; every plane is
// [C,S,S] with S = size. Planes are stored already scaled by `scales`.
struct FaceChannels {
  std::size_t size = 0;
  Tensor<double> rgb;     // [3,S,S] linear light
  Tensor<double> a;       // [1,S,S]
  Tensor<double> b;       // [1,S,S]
  Tensor<double> base;    // [1,S,S]
  Tensor<double> detail;  // [1,S,S]
  ChannelScales scales;
};

// Unscaled lightness split: base + detail == L up to the rounding of the
// subtraction that defines detail.
struct LightnessSplit {
  Tensor<double> L;
  Tensor<double> base;
  Tensor<double> detail;
};

LightnessSplit split_lightness(const Tensor<double>& L, const WlsParams& p);

// resize -> CIELAB -> WLS base -> detail = L - base.
FaceChannels decompose(const ImageRGB& img, const WlsParams& p, std::size_t out_size,
                       LightnessSplit* raw = nullptr);

}  // namespace fbp::img
