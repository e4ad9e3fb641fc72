#pragma once

#include <cstdint>
#include <vector>

#include "fbp/net/kernels.hpp"
#include "fbp/net/spec.hpp"
#include "fbp/rng.hpp"
#include "fbp/tensor.hpp"

namespace fbp::nn {

enum class Mode { train, eval };

// Weight and bias of one layer; both empty for pool and dropout layers.
template <typename T>
struct LayerParams {
  Tensor<T> weight;
  Tensor<T> bias;
};

// Gradients share the layout of the parameters.
template <typename T>
using Gradients = std::vector<LayerParams<T>>;

// Everything backward() needs from a forward pass.
template <typename T>
struct ForwardCache {
  std::uint64_t net_id = 0;
  std::uint64_t version = 0;
  std::vector<Tensor<T>> activations;                  // [0] input, [i+1] output of layer i
  std::vector<std::vector<std::uint32_t>> argmax;      // pool layers
  std::vector<Tensor<T>> masks;                        // dropout layers (train mode)
};

struct SgdParams {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  // Multiplier per parameterised layer, in layer order; empty means all 1.
  std::vector<double> layer_lr_mult;
};

enum class AdaptMode {
  reinit,     // fresh uniform init for the first convolution
  replicate,  // every new channel gets the channel-sum of the old filters / new_channels
};

template <typename T>
class Network {
 public:
  // Builds the network for `in_channels` input planes; weights are drawn
  // uniform(-s, s) with s = sqrt(3 / fan_in) from Rng(seed), biases zero.
  Network(NetworkSpec spec, std::size_t in_channels, std::uint64_t seed);

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::size_t in_channels() const noexcept { return in_channels_; }
  const std::vector<LayerShape>& shapes() const noexcept { return shapes_; }

  const std::vector<LayerParams<T>>& params() const noexcept { return params_; }
  // Mutable access invalidates outstanding forward caches.
  std::vector<LayerParams<T>>& mutable_params() noexcept {
    ++version_;
    return params_;
  }
  const std::vector<LayerParams<T>>& velocity() const noexcept { return velocity_; }
  // Zeroes the momentum state, e.g. when a new training stage starts.
  void reset_velocity();

  // batch [N,C,K,K] -> predictions [N,1]. Train mode draws dropout masks
  // from `dropout_rng` (required in train mode when the network has dropout).
  Tensor<T> forward(const Tensor<T>& batch, Mode mode, Rng* dropout_rng = nullptr,
                    ForwardCache<T>* cache = nullptr) const;

  // Gradients of the loss with respect to every parameter, given the
  // derivative of the loss with respect to the predictions.
  Gradients<T> backward(const ForwardCache<T>& cache, const Tensor<T>& d_pred) const;

  // v <- momentum * v - lr * mult * (g + weight_decay * w); w <- w + v.
  void sgd_step(const Gradients<T>& grads, const SgdParams& p);

  // Copy of this network for a different input channel count; layers past
  // the first convolution are copied verbatim.
  Network adapt_input(std::size_t new_channels, std::uint64_t seed, AdaptMode mode = AdaptMode::reinit) const;

  std::size_t parameter_count() const;

 private:
  void check_batch(const Tensor<T>& batch) const;
  static std::uint64_t next_id();

  NetworkSpec spec_;
  std::size_t in_channels_ = 0;
  std::vector<LayerShape> shapes_;
  std::vector<LayerParams<T>> params_;
  std::vector<LayerParams<T>> velocity_;
  std::uint64_t id_ = 0;
  std::uint64_t version_ = 0;
};

// Zero-filled gradient buffers matching a network's parameters.
template <typename T>
Gradients<T> zero_gradients(const Network<T>& net);

}  // namespace fbp::nn
