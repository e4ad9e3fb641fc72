#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "fbp/imageproc/decompose.hpp"

namespace fbp::pipeline {

// Decomposition results keyed by (image content hash, WLS parameters,
// output size). Files live at <dir>/<image hash>/<params fingerprint>.plane.bin.
// An empty directory disables the disk layer; results are always memoised
// in memory for the lifetime of the cache object.
class DecompositionCache {
 public:
  explicit DecompositionCache(std::filesystem::path dir = {}) : dir_(std::move(dir)) {}

  const img::FaceChannels& get(const std::filesystem::path& image, const img::WlsParams& p, std::size_t size);

  const std::filesystem::path& dir() const { return dir_; }
  std::size_t disk_hits() const { return disk_hits_; }
  std::size_t computed() const { return computed_; }

  static std::string params_fingerprint(const img::WlsParams& p, std::size_t size);

 private:
  std::optional<img::FaceChannels> read_file(const std::filesystem::path& file, std::size_t size) const;
  void write_file(const std::filesystem::path& file, const img::FaceChannels& ch) const;

  std::filesystem::path dir_;
  std::map<std::string, img::FaceChannels> memo_;
  std::size_t disk_hits_ = 0;
  std::size_t computed_ = 0;
};

// FBP_CACHE_DIR if set, else `fallback`.
std::filesystem::path resolve_cache_dir(const std::filesystem::path& fallback);

}  // namespace fbp::pipeline
