#pragma once

#include <filesystem>
#include <span>

#include "fbp/net/model_io.hpp"
#include "fbp/pipeline/cache.hpp"
#include "fbp/pipeline/evaluate.hpp"
#include "fbp/tensor.hpp"

namespace fbp::viz {

enum class MapStage { pre_pool, post_pool };

// Tiled responses of one convolution layer, one tile per output map.
struct FeatureMapGrid {
  std::size_t layer = 0;  // 1-based convolution index
  std::size_t count = 0;
  std::size_t rows = 0, cols = 0;
  std::size_t map_height = 0, map_width = 0;  // before upsampling
  std::size_t scale = 1;                      // nearest-neighbour factor, 8 when an extent is < 4
  Tensor<double> image;                       // [1,H,W] in [0,1]
};

// Min-max normalizes one map into [0,1]; a constant map becomes 0.5.
void normalize_map(std::span<double> map);

// Tiles [M,h,w] maps on a grid of cols = ceil(sqrt(M)) columns separated by
// 1-px white lines. Each tile is normalized on its own. Output extents are
//   H = rows * h * scale + (rows - 1),  W = cols * w * scale + (cols - 1).
// Unused trailing tiles stay black.
FeatureMapGrid tile_maps(const Tensor<double>& maps, std::size_t layer);

// Eval-mode forward of the center crop of `image`, then the responses of
// convolution `layer` (1-based) after its ReLU, before (default) or after
// the following pool.
template <typename T>
FeatureMapGrid feature_maps(const nn::LoadedModel<T>& model, const std::filesystem::path& image, std::size_t layer,
                            pipeline::DecompositionCache& cache, MapStage stage = MapStage::pre_pool);

void write_grid(const FeatureMapGrid& grid, const std::filesystem::path& path);

// Scatter raster geometry: square canvas, plot square of side kScatterSpan
// pixels inset by kScatterMargin. Score s in [1,5] maps to offset
// r(s) = round((s - 1) / 4 * kScatterSpan); a point (t, p) lands on pixel
// (margin + r(t), margin + span - r(p)). The identity line is the pixel set
// (margin + i, margin + span - i) for i in [0, span], so an exact prediction
// always sits on it. Values outside [1,5] are clamped.
inline constexpr std::size_t kScatterSize = 256;
inline constexpr std::size_t kScatterMargin = 16;
inline constexpr std::size_t kScatterSpan = kScatterSize - 1 - 2 * kScatterMargin;

struct ScatterPixel {
  std::size_t x = 0, y = 0;
};
ScatterPixel scatter_pixel(double truth, double prediction);

// Writes `<out>.ppm` (white canvas, grey frame, blue identity line, red 3x3
// markers) and `<out>.csv` with id,truth,prediction,px,py per sample.
void scatter_report(const pipeline::EvalReport& report, const std::filesystem::path& out_stem);

}  // namespace fbp::viz
