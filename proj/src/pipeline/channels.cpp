#include "fbp/pipeline/channels.hpp"

#include <algorithm>

namespace fbp::pipeline {

ChannelSet parse_channel_set(const std::string& name) {
  if (name == "a") return ChannelSet::a;
  if (name == "b") return ChannelSet::b;
  if (name == "rgb") return ChannelSet::rgb;
  if (name == "base") return ChannelSet::base;
  if (name == "detail") return ChannelSet::detail;
  if (name == "rgb+base+detail" || name == "combined") return ChannelSet::combined;
  throw ArgumentError("unknown channel set '" + name + "' (expected a, b, rgb, base, detail, rgb+base+detail)");
}

std::string to_string(ChannelSet s) {
  switch (s) {
    case ChannelSet::a: return "a";
    case ChannelSet::b: return "b";
    case ChannelSet::rgb: return "rgb";
    case ChannelSet::base: return "base";
    case ChannelSet::detail: return "detail";
    case ChannelSet::combined: return "rgb+base+detail";
  }
  return "?";
}

std::size_t channel_count(ChannelSet s) {
  switch (s) {
    case ChannelSet::rgb: return 3;
    case ChannelSet::combined: return 5;
    default: return 1;
  }
}

Tensor<double> assemble_planes(const img::FaceChannels& ch, ChannelSet set) {
  std::vector<const Tensor<double>*> parts;
  switch (set) {
    case ChannelSet::a: parts = {&ch.a}; break;
    case ChannelSet::b: parts = {&ch.b}; break;
    case ChannelSet::rgb: parts = {&ch.rgb}; break;
    case ChannelSet::base: parts = {&ch.base}; break;
    case ChannelSet::detail: parts = {&ch.detail}; break;
    case ChannelSet::combined: parts = {&ch.rgb, &ch.base, &ch.detail}; break;
  }
  const std::size_t S = ch.size;
  Tensor<double> out({channel_count(set), S, S});
  auto dst = out.data().begin();
  for (const auto* p : parts) {
    if (p->rank() != 3 || p->dim(1) != S || p->dim(2) != S) throw ShapeError("assemble_planes: plane size mismatch");
    dst = std::copy(p->data().begin(), p->data().end(), dst);
  }
  return out;
}

namespace {
void check_crop(std::size_t stored, std::size_t crop) {
  if (crop == 0 || crop > stored)
    throw ArgumentError("crop size " + std::to_string(crop) + " must lie in [1, " + std::to_string(stored) + "]");
}
}  // namespace

CropOffset random_offset(std::size_t stored, std::size_t crop, Rng& rng) {
  check_crop(stored, crop);
  const std::size_t span = stored - crop + 1;
  const std::size_t top = rng_randint(rng, span);
  const std::size_t left = rng_randint(rng, span);
  return {top, left};
}

CropOffset center_offset(std::size_t stored, std::size_t crop) {
  check_crop(stored, crop);
  return {(stored - crop) / 2, (stored - crop) / 2};
}

std::vector<Tensor<double>> make_training_crops(const Tensor<double>& planes, std::size_t crop, std::size_t n,
                                                Rng& rng) {
  if (planes.rank() != 3 || planes.dim(1) != planes.dim(2)) throw ShapeError("make_training_crops expects [C,S,S]");
  std::vector<Tensor<double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CropOffset o = random_offset(planes.dim(1), crop, rng);
    out.push_back(crop2d(planes, o.top, o.left, crop, crop));
  }
  return out;
}

Tensor<double> center_crop(const Tensor<double>& planes, std::size_t crop) {
  if (planes.rank() != 3 || planes.dim(1) != planes.dim(2)) throw ShapeError("center_crop expects [C,S,S]");
  const CropOffset o = center_offset(planes.dim(1), crop);
  return crop2d(planes, o.top, o.left, crop, crop);
}

}  // namespace fbp::pipeline
