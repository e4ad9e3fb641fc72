#pragma once

#include <cstdint>
#include <filesystem>

#include "fbp/pipeline/dataset.hpp"

namespace fbp::pipeline {

// Synthetic portrait corpus for desk-scale experiments.
//
// Each image draws two controls uniformly from [0, 1]: lightness g and edge
// energy e. The picture is a bright elliptical "face" on a dark background
// (face L* = 45 + 40 g, background L* = 20) whose rim sharpens with e, plus
// an eye band and a mouth band of sinusoidal texture with amplitude
// 2 + 14 e in L*. The score is
//
//   score = 1 + 4 (0.6 g + 0.4 e)   rounded to 1e-4,
//
// monotone in both controls and always in [1, 5]. Files are
// `img_0000.ppm`, ... plus `index.csv`; the same seed gives byte-identical
// output.
DatasetIndex synth_dataset(std::size_t n, std::size_t size, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace fbp::pipeline
