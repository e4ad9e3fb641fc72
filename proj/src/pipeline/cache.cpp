#include "fbp/pipeline/cache.hpp"

#include <bit>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "fbp/hash.hpp"
#include "fbp/imageproc/pnm.hpp"

namespace fbp::pipeline {

namespace {

constexpr std::uint64_t kPlaneMagic = 0x31454e414c504246ULL;  // "FBPLANE1"

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::vector<std::uint8_t>& b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[at + i]) << (8 * i);
  return v;
}

std::vector<Tensor<double>*> planes_of(img::FaceChannels& ch) { return {&ch.rgb, &ch.a, &ch.b, &ch.base, &ch.detail}; }

}  // namespace

std::string DecompositionCache::params_fingerprint(const img::WlsParams& p, std::size_t size) {
  std::ostringstream s;
  s.precision(17);
  s << "lambda=" << p.lambda << ";alpha=" << p.alpha << ";eps=" << p.eps << ";cg_tol=" << p.cg_tol
    << ";cg_max_iters=" << p.cg_max_iters << ";size=" << size;
  return hex64(fnv1a64(s.str()));
}

const img::FaceChannels& DecompositionCache::get(const std::filesystem::path& image, const img::WlsParams& p,
                                                 std::size_t size) {
  const auto bytes = slurp(image);
  const std::string image_hash = hex64(fnv1a64(bytes));
  const std::string fp = params_fingerprint(p, size);
  const std::string key = image_hash + "/" + fp;
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  std::filesystem::path file;
  if (!dir_.empty()) {
    file = dir_ / image_hash / (fp + ".plane.bin");
    if (auto hit = read_file(file, size)) {
      ++disk_hits_;
      return memo_.emplace(key, std::move(*hit)).first->second;
    }
  }
  img::FaceChannels ch = img::decompose(img::read_image(image), p, size);
  ++computed_;
  if (!file.empty()) write_file(file, ch);
  return memo_.emplace(key, std::move(ch)).first->second;
}

std::optional<img::FaceChannels> DecompositionCache::read_file(const std::filesystem::path& file,
                                                               std::size_t size) const {
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) return std::nullopt;
  const auto b = slurp(file);
  const std::size_t n = size * size;
  const std::size_t payload = (3 + 1 + 1 + 1 + 1) * n * 8;
  if (b.size() != 16 + payload + 8 || get_u64(b, 0) != kPlaneMagic || get_u64(b, 8) != size) return std::nullopt;
  if (get_u64(b, b.size() - 8) != fnv1a64(std::span<const std::uint8_t>(b.data(), b.size() - 8))) return std::nullopt;

  img::FaceChannels ch;
  ch.size = size;
  ch.rgb = Tensor<double>({3, size, size});
  ch.a = Tensor<double>({1, size, size});
  ch.b = Tensor<double>({1, size, size});
  ch.base = Tensor<double>({1, size, size});
  ch.detail = Tensor<double>({1, size, size});
  std::size_t at = 16;
  for (auto* t : planes_of(ch))
    for (auto& v : t->data()) {
      v = std::bit_cast<double>(get_u64(b, at));
      at += 8;
    }
  return ch;
}

void DecompositionCache::write_file(const std::filesystem::path& file, const img::FaceChannels& ch_in) const {
  img::FaceChannels ch = ch_in;
  std::vector<std::uint8_t> b;
  put_u64(b, kPlaneMagic);
  put_u64(b, ch.size);
  for (auto* t : planes_of(ch))
    for (double v : t->data()) put_u64(b, std::bit_cast<std::uint64_t>(v));
  put_u64(b, fnv1a64(b));

  std::filesystem::create_directories(file.parent_path());
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write cache file " + tmp);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  }
  std::filesystem::rename(tmp, file);
}

std::filesystem::path resolve_cache_dir(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("FBP_CACHE_DIR"); env && *env) return env;
  return fallback;
}

}  // namespace fbp::pipeline
