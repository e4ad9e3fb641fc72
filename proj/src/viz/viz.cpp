#include "fbp/viz/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fbp/imageproc/pnm.hpp"
#include "fbp/pipeline/channels.hpp"

namespace fbp::viz {

void normalize_map(std::span<double> map) {
  if (map.empty()) return;
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  const double a = *lo, b = *hi;
  if (!(b > a)) {
    std::fill(map.begin(), map.end(), 0.5);
    return;
  }
  for (double& v : map) v = (v - a) / (b - a);
}

FeatureMapGrid tile_maps(const Tensor<double>& maps, std::size_t layer) {
  if (maps.rank() != 3) throw ShapeError("tile_maps: expected [M,h,w], got " + shape_str(maps.shape()));
  FeatureMapGrid g;
  g.layer = layer;
  g.count = maps.dim(0);
  g.map_height = maps.dim(1);
  g.map_width = maps.dim(2);
  g.cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(g.count))));
  g.rows = (g.count + g.cols - 1) / g.cols;
  g.scale = (g.map_height < 4 || g.map_width < 4) ? 8 : 1;
  const std::size_t th = g.map_height * g.scale, tw = g.map_width * g.scale;
  const std::size_t H = g.rows * th + (g.rows - 1), W = g.cols * tw + (g.cols - 1);
  g.image = Tensor<double>({1, H, W});
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      if ((y % (th + 1)) == th || (x % (tw + 1)) == tw) g.image.at(0, y, x) = 1.0;

  const std::size_t n = g.map_height * g.map_width;
  std::vector<double> buf(n);
  for (std::size_t m = 0; m < g.count; ++m) {
    std::copy_n(maps.ptr() + m * n, n, buf.begin());
    normalize_map(buf);
    const std::size_t oy = (m / g.cols) * (th + 1), ox = (m % g.cols) * (tw + 1);
    for (std::size_t y = 0; y < th; ++y)
      for (std::size_t x = 0; x < tw; ++x)
        g.image.at(0, oy + y, ox + x) = buf[(y / g.scale) * g.map_width + x / g.scale];
  }
  return g;
}

template <typename T>
FeatureMapGrid feature_maps(const nn::LoadedModel<T>& model, const std::filesystem::path& image, std::size_t layer,
                            pipeline::DecompositionCache& cache, MapStage stage) {
  const nn::NetworkSpec& spec = model.net.spec();
  const std::size_t convs = nn::conv_layer_count(spec);
  if (layer < 1 || layer > convs)
    throw ArgumentError("feature_maps: layer " + std::to_string(layer) + " out of range [1, " + std::to_string(convs) +
                        "]");
  std::size_t li = 0;
  for (std::size_t seen = 0; li < spec.layers.size(); ++li)
    if (spec.layers[li].kind == nn::LayerKind::conv && ++seen == layer) break;
  if (stage == MapStage::post_pool) ++li;  // every conv is followed by its pool

  const auto set = pipeline::parse_channel_set(model.descriptor.channel_set);
  const Tensor<double> planes = pipeline::center_crop(
      pipeline::prepare_planes(cache.get(image, model.descriptor.wls, spec.stored_size), set, model.descriptor.means,
                               model.descriptor.stds),
      spec.crop_size);
  Tensor<T> x({1, planes.dim(0), planes.dim(1), planes.dim(2)});
  for (std::size_t i = 0; i < planes.size(); ++i) x[i] = static_cast<T>(planes[i]);

  nn::ForwardCache<T> fc;
  model.net.forward(x, nn::Mode::eval, nullptr, &fc);
  const Tensor<T>& act = fc.activations.at(li + 1);
  return tile_maps(act.template cast<double>().reshaped({act.dim(1), act.dim(2), act.dim(3)}), layer);
}

void write_grid(const FeatureMapGrid& grid, const std::filesystem::path& path) {
  img::write_pgm(grid.image, path, 0.0, 1.0);
}

ScatterPixel scatter_pixel(double truth, double prediction) {
  auto r = [](double s) {
    const double t = (std::clamp(s, 1.0, 5.0) - 1.0) / 4.0;
    return static_cast<std::size_t>(std::lround(t * static_cast<double>(kScatterSpan)));
  };
  return {kScatterMargin + r(truth), kScatterMargin + kScatterSpan - r(prediction)};
}

void scatter_report(const pipeline::EvalReport& report, const std::filesystem::path& out_stem) {
  if (report.samples.empty()) throw ArgumentError("scatter_report: empty report");
  constexpr std::size_t N = kScatterSize, M = kScatterMargin, S = kScatterSpan;
  img::Raster8 r{N, N, 3, std::vector<std::uint8_t>(N * N * 3, 255)};
  auto put = [&](std::size_t x, std::size_t y, std::uint8_t cr, std::uint8_t cg, std::uint8_t cb) {
    if (x >= N || y >= N) return;
    std::uint8_t* p = &r.bytes[(y * N + x) * 3];
    p[0] = cr;
    p[1] = cg;
    p[2] = cb;
  };
  for (std::size_t i = 0; i <= S; ++i) {
    put(M + i, M, 160, 160, 160);
    put(M + i, M + S, 160, 160, 160);
    put(M, M + i, 160, 160, 160);
    put(M + S, M + i, 160, 160, 160);
  }
  for (std::size_t i = 0; i <= S; ++i) put(M + i, M + S - i, 0, 0, 255);

  std::string base = out_stem.string();
  std::ofstream csv(base + ".csv");
  if (!csv) throw IoError("cannot write " + base + ".csv");
  csv << "id,truth,prediction,px,py\n";
  char line[128];
  for (const auto& s : report.samples) {
    const ScatterPixel p = scatter_pixel(s.truth, s.prediction);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        put(static_cast<std::size_t>(static_cast<long>(p.x) + dx), static_cast<std::size_t>(static_cast<long>(p.y) + dy),
            255, 0, 0);
    std::snprintf(line, sizeof line, ",%.17g,%.17g,%zu,%zu\n", s.truth, s.prediction, p.x, p.y);
    csv << s.id << line;
  }
  img::write_pnm(r, base + ".ppm");
}

template FeatureMapGrid feature_maps(const nn::LoadedModel<float>&, const std::filesystem::path&, std::size_t,
                                     pipeline::DecompositionCache&, MapStage);
template FeatureMapGrid feature_maps(const nn::LoadedModel<double>&, const std::filesystem::path&, std::size_t,
                                     pipeline::DecompositionCache&, MapStage);

}  // namespace fbp::viz
