#include "fbp/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "fbp/imageproc/color.hpp"
#include "fbp/imageproc/pnm.hpp"
#include "fbp/rng.hpp"

namespace fbp::pipeline {

namespace {

double smoothstep(double lo, double hi, double x) {
  const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

img::ImageRGB render(std::size_t size, double g, double e, Rng& rng) {
  const double s = static_cast<double>(size);
  const double cx = 0.5 + 0.04 * (rng.next_double() - 0.5);
  const double cy = 0.52 + 0.04 * (rng.next_double() - 0.5);
  const double phase = 2.0 * std::numbers::pi * rng.next_double();
  const double rim = 0.30 - 0.26 * e;  // transition width in normalized radius
  const double face_L = 45.0 + 40.0 * g, amp = 2.0 + 14.0 * e;
  const double cycles = std::max(2.0, s / 6.0);

  img::ImageRGB out(size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / s, v = (static_cast<double>(y) + 0.5) / s;
      const double r = std::hypot((u - cx) / 0.32, (v - cy) / 0.40);
      const double inside = 1.0 - smoothstep(1.0 - rim / 2.0, 1.0 + rim / 2.0, r);
      double L = 20.0 + (face_L - 20.0) * inside;
      const double band = smoothstep(0.30, 0.36, v) * (1.0 - smoothstep(0.44, 0.50, v)) +
                          smoothstep(0.64, 0.68, v) * (1.0 - smoothstep(0.72, 0.76, v));
      L += amp * band * inside * std::sin(2.0 * std::numbers::pi * cycles * u + phase);
      const auto rgb = img::lab_to_linear_rgb(std::clamp(L, 0.0, 100.0), 12.0 * inside, 15.0 * inside);
      for (std::size_t c = 0; c < 3; ++c) out.at(x, y, c) = std::clamp(rgb[c], 0.0, 1.0);
    }
  return out;
}

}  // namespace

DatasetIndex synth_dataset(std::size_t n, std::size_t size, std::uint64_t seed, const std::filesystem::path& out_dir) {
  if (n < 2) throw ArgumentError("synth_dataset: n must be >= 2");
  if (size < 4) throw ArgumentError("synth_dataset: size must be >= 4");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("synth_dataset: cannot create " + out_dir.string() + ": " + ec.message());

  DatasetIndex idx;
  idx.provenance = "synthetic";
  Rng master(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = master.split();
    const double g = rng.next_double(), e = rng.next_double();
    const double score = std::round((1.0 + 4.0 * (0.6 * g + 0.4 * e)) * 1e4) / 1e4;
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.ppm", i);
    const auto path = out_dir / name;
    img::write_ppm(render(size, g, e, rng), path);
    idx.records.push_back({path, score});
  }
  write_index(idx, out_dir / "index.csv");
  return idx;
}

}  // namespace fbp::pipeline
