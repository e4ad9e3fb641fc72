#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fbp::nn {

enum class LayerKind { conv, pool, fully_connected, dropout };

const char* to_string(LayerKind k);

// One layer of a network description. Convolutions always use stride 1
// and no padding; pooling is always non-overlapping 2x2 max pooling.
struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  std::size_t out = 0;     // maps (conv) or neurons (fully_connected)
  std::size_t kernel = 0;  // square kernel side (conv)
  bool relu = false;       // ReLU applied to the layer output
  double keep_rate = 1.0;  // dropout

  static LayerSpec conv(std::size_t maps, std::size_t kernel) { return {LayerKind::conv, maps, kernel, true, 1.0}; }
  static LayerSpec pool() { return {LayerKind::pool, 0, 2, false, 1.0}; }
  static LayerSpec fc(std::size_t neurons, bool relu) { return {LayerKind::fully_connected, neurons, 0, relu, 1.0}; }
  static LayerSpec dropout(double keep) { return {LayerKind::dropout, 0, 0, false, keep}; }

  bool has_params() const { return kind == LayerKind::conv || kind == LayerKind::fully_connected; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  std::string name = "custom";
  std::size_t stored_size = 0;  // side of the stored (pre-crop) planes
  std::size_t crop_size = 0;    // side of the network input
  std::vector<LayerSpec> layers;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Activation extents after a layer ([C,H,W]; FC outputs are [out,1,1]).
struct LayerShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t numel() const { return channels * height * width; }
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// The three basic architectures. keep_rate is the dropout keep probability
// placed after the first fully connected layer.
NetworkSpec cnn1(double keep_rate = 0.5);
NetworkSpec cnn2(double keep_rate = 0.5);
NetworkSpec cnn3(double keep_rate = 0.5);

// "cnn-1" / "cnn-2" / "cnn-3" (case-insensitive, "cnn1" accepted).
NetworkSpec spec_by_name(const std::string& name, double keep_rate = 0.5);

// Scaled-down variant with CNN-1's layer widths (50/100/150 maps, FC 300)
// and kernels 3/2/1 so that a 12x12 input still yields a valid chain.
NetworkSpec cnn1_toy(double keep_rate = 0.5);

// Validates the layer sequence and returns the activation shape after
// every layer (element 0 is the input). Throws SpecError naming the layer.
std::vector<LayerShape> shape_chain(const NetworkSpec& spec, std::size_t in_channels);

// Spatial side lengths through the conv/pool stack, starting with the crop
// size (e.g. 48, 42, 21, 16, 8, 4, 2 for CNN-1).
std::vector<std::size_t> side_lengths(const NetworkSpec& spec);

std::size_t conv_layer_count(const NetworkSpec& spec);

}  // namespace fbp::nn
