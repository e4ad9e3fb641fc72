#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fbp/imageproc/decompose.hpp"
#include "fbp/rng.hpp"
#include "fbp/tensor.hpp"

namespace fbp::pipeline {

enum class ChannelSet { a, b, rgb, base, detail, combined };

// "a", "b", "rgb", "base", "detail", "rgb+base+detail" (alias "combined").
ChannelSet parse_channel_set(const std::string& name);
std::string to_string(ChannelSet s);
std::size_t channel_count(ChannelSet s);

// Stacks the member planes of `set` into one [C,S,S] tensor.
Tensor<double> assemble_planes(const img::FaceChannels& ch, ChannelSet set);

// Top-left corner of a crop window.
struct CropOffset {
  std::size_t top = 0;
  std::size_t left = 0;
  friend bool operator==(const CropOffset&, const CropOffset&) = default;
};

CropOffset random_offset(std::size_t stored, std::size_t crop, Rng& rng);
CropOffset center_offset(std::size_t stored, std::size_t crop);

// n crops of side `crop` at independent uniform offsets in [0, S-crop]^2;
// every plane of one crop shares the offset.
std::vector<Tensor<double>> make_training_crops(const Tensor<double>& planes, std::size_t crop, std::size_t n, Rng& rng);

Tensor<double> center_crop(const Tensor<double>& planes, std::size_t crop);

}  // namespace fbp::pipeline
