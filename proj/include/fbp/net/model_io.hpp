#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fbp/imageproc/wls.hpp"
#include "fbp/net/network.hpp"

namespace fbp::nn {

// Which facial planes feed the network and how they were preprocessed.
struct ChannelDescriptor {
  std::string channel_set;    // e.g. "detail", "rgb", "rgb+base+detail"
  std::vector<double> means;  // per-input-channel mean subtracted before the net
  std::vector<double> stds;   // per-input-channel divisor applied after the mean; empty means 1
  img::WlsParams wls;         // decomposition parameters the planes were made with

  friend bool operator==(const ChannelDescriptor& a, const ChannelDescriptor& b) {
    return a.channel_set == b.channel_set && a.means == b.means && a.stds == b.stds && a.wls.lambda == b.wls.lambda &&
           a.wls.alpha == b.wls.alpha && a.wls.eps == b.wls.eps && a.wls.cg_tol == b.wls.cg_tol &&
           a.wls.cg_max_iters == b.wls.cg_max_iters;
  }
};

template <typename T>
struct LoadedModel {
  Network<T> net;
  ChannelDescriptor descriptor;
};

inline constexpr std::uint32_t kModelVersion = 1;

// Model file layout (all integers and floats little-endian):
//   "FBPM" | u32 version | u8 scalar bytes (4 or 8)
//   spec:  str name | u32 in_channels | u32 stored | u32 crop | u32 layer count
//          per layer: u8 kind | u32 out | u32 kernel | u8 relu | f64 keep
//   desc:  str channel set | u32 n | f64 means[n] | f64 stds[n] | f64 lambda, alpha, eps, cg_tol | u64 cg_max_iters
//   data:  u32 tensor count | per tensor: u8 rank | u32 extents[rank] | scalars
//   u64 FNV-1a of every preceding byte
// where str is u32 length followed by the bytes.
template <typename T>
std::vector<std::uint8_t> encode_model(const Network<T>& net, const ChannelDescriptor& desc);

template <typename T>
LoadedModel<T> decode_model(const std::vector<std::uint8_t>& bytes);

template <typename T>
void save_model(const Network<T>& net, const ChannelDescriptor& desc, const std::filesystem::path& path);

template <typename T>
LoadedModel<T> load_model(const std::filesystem::path& path);

// Scalar width (4 or 8) recorded in a model file header.
std::size_t model_scalar_bytes(const std::filesystem::path& path);

}  // namespace fbp::nn
