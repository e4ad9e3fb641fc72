#include "fbp/imageproc/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace fbp::img {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < buf_.size()) {
      if (buf_[pos_] == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n') ++pos_;
      } else if (std::isspace(buf_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < buf_.size() && std::isdigit(buf_[pos_])) {
      v = v * 10 + (buf_[pos_] - '0');
      if (v > 1'000'000'000UL) throw FormatError(std::string("pnm: ") + field + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw FormatError(std::string("pnm: expected ") + field, start);
    return v;
  }

  // Exactly one whitespace byte separates maxval from the payload.
  void single_space() {
    if (pos_ >= buf_.size() || !std::isspace(buf_[pos_])) throw FormatError("pnm: expected whitespace after maxval", pos_);
    ++pos_;
  }

 private:
  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_ = 2;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

std::uint8_t quantize_unit(double v) {
  const double x = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(x));
}

Raster8 read_pnm(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6'))
    throw FormatError("pnm: missing P5/P6 magic in " + path.string(), 0);

  Raster8 r;
  r.channels = buf[1] == '6' ? 3 : 1;
  HeaderReader hdr(buf);
  r.width = hdr.number("width");
  r.height = hdr.number("height");
  const std::size_t maxval_at = hdr.pos();
  const unsigned long maxval = hdr.number("maxval");
  if (r.width == 0 || r.height == 0) throw FormatError("pnm: zero image extent", maxval_at);
  if (maxval == 0 || maxval > 255) throw FormatError("pnm: only 8-bit maxval (1..255) supported", maxval_at);
  hdr.single_space();

  const std::size_t need = r.width * r.height * r.channels;
  const std::size_t have = buf.size() - hdr.pos();
  if (have < need)
    throw FormatError("pnm: truncated payload, expected " + std::to_string(need) + " bytes, found " +
                          std::to_string(have),
                      buf.size());
  r.bytes.assign(buf.begin() + static_cast<std::ptrdiff_t>(hdr.pos()),
                 buf.begin() + static_cast<std::ptrdiff_t>(hdr.pos() + need));
  if (maxval != 255) {
    for (auto& b : r.bytes) {
      if (b > maxval) throw FormatError("pnm: sample exceeds maxval", hdr.pos());
      b = static_cast<std::uint8_t>(std::lround(b * 255.0 / maxval));
    }
  }
  return r;
}

void write_pnm(const Raster8& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (r.channels == 3 ? "P6" : "P5") << "\n" << r.width << " " << r.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(r.bytes.data()), static_cast<std::streamsize>(r.bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

ImageRGB read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const Raster8 r = read_pnm(path);
  if (r.channels != 3) throw FormatError("read_image: expected binary PPM (P6) in " + path.string(), 0);

  double lut[256];
  for (int i = 0; i < 256; ++i) lut[i] = srgb_to_linear(i / 255.0);

  ImageRGB img(r.width, r.height);
  std::transform(r.bytes.begin(), r.bytes.end(), img.pixels.begin(), [&](std::uint8_t b) { return lut[b]; });
  return img;
}

void write_ppm(const ImageRGB& img, const std::filesystem::path& path) {
  Raster8 r{img.width, img.height, 3, {}};
  r.bytes.resize(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), r.bytes.begin(),
                 [](double v) { return quantize_unit(linear_to_srgb(std::clamp(v, 0.0, 1.0))); });
  write_pnm(r, path);
}

void write_pgm(const Tensor<double>& plane, const std::filesystem::path& path, double lo, double hi) {
  if (!(lo < hi)) throw ArgumentError("write_pgm requires lo < hi");
  if (plane.rank() != 3 || plane.dim(0) != 1) throw ShapeError("write_pgm expects [1,H,W], got " + shape_str(plane.shape()));
  Raster8 r{plane.dim(2), plane.dim(1), 1, {}};
  r.bytes.resize(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) r.bytes[i] = quantize_unit((plane[i] - lo) / (hi - lo));
  write_pnm(r, path);
}

}  // namespace fbp::img
