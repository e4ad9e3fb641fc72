#include "fbp/net/network.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace fbp::nn {

template <typename T>
std::uint64_t Network<T>::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

template <typename T>
Network<T>::Network(NetworkSpec spec, std::size_t in_channels, std::uint64_t seed)
    : spec_(std::move(spec)), in_channels_(in_channels), id_(next_id()) {
  shapes_ = shape_chain(spec_, in_channels_);
  Rng rng(seed);
  params_.resize(spec_.layers.size());
  velocity_.resize(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const LayerShape& in = shapes_[i];
    Shape wshape;
    std::size_t fan_in = 0;
    if (l.kind == LayerKind::conv) {
      wshape = {l.out, in.channels, l.kernel, l.kernel};
      fan_in = in.channels * l.kernel * l.kernel;
    } else if (l.kind == LayerKind::fully_connected) {
      wshape = {l.out, in.numel()};
      fan_in = in.numel();
    } else {
      continue;
    }
    const double s = std::sqrt(3.0 / static_cast<double>(fan_in));
    params_[i].weight = rng_uniform<T>(rng, wshape, -s, s);
    params_[i].bias = Tensor<T>({l.out});
    velocity_[i].weight = Tensor<T>(wshape);
    velocity_[i].bias = Tensor<T>({l.out});
  }
}

template <typename T>
Network<T>::Network(const Network& o)
    : spec_(o.spec_),
      in_channels_(o.in_channels_),
      shapes_(o.shapes_),
      params_(o.params_),
      velocity_(o.velocity_),
      id_(next_id()),
      version_(0) {}

template <typename T>
Network<T>& Network<T>::operator=(const Network& o) {
  if (this != &o) {
    spec_ = o.spec_;
    in_channels_ = o.in_channels_;
    shapes_ = o.shapes_;
    params_ = o.params_;
    velocity_ = o.velocity_;
    ++version_;
  }
  return *this;
}

template <typename T>
void Network<T>::check_batch(const Tensor<T>& batch) const {
  const Shape want{batch.rank() == 4 ? batch.dim(0) : 0, in_channels_, spec_.crop_size, spec_.crop_size};
  if (batch.rank() != 4 || batch.shape() != want)
    throw ShapeError(spec_.name + ": expected batch [N," + std::to_string(in_channels_) + "," +
                     std::to_string(spec_.crop_size) + "," + std::to_string(spec_.crop_size) + "], got " +
                     shape_str(batch.shape()));
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, Mode mode, Rng* dropout_rng, ForwardCache<T>* cache) const {
  check_batch(batch);
  const std::size_t L = spec_.layers.size();
  ForwardCache<T> local;
  ForwardCache<T>& c = cache ? *cache : local;
  c = ForwardCache<T>{};
  c.net_id = id_;
  c.version = version_;
  c.activations.reserve(L + 1);
  c.activations.push_back(batch);
  c.argmax.resize(L);
  c.masks.resize(L);

  for (std::size_t i = 0; i < L; ++i) {
    const LayerSpec& l = spec_.layers[i];
    const Tensor<T>& x = c.activations.back();
    Tensor<T> y;
    switch (l.kind) {
      case LayerKind::conv:
        y = kernels::conv2d_forward(x, params_[i].weight, params_[i].bias, l.relu);
        break;
      case LayerKind::pool: {
        auto r = kernels::maxpool2_forward(x);
        y = std::move(r.output);
        c.argmax[i] = std::move(r.argmax);
        break;
      }
      case LayerKind::fully_connected:
        y = kernels::fc_forward(x, params_[i].weight, params_[i].bias, l.relu);
        break;
      case LayerKind::dropout:
        if (mode == Mode::train && l.keep_rate < 1.0) {
          if (!dropout_rng) throw StateError(spec_.name + ": train-mode forward needs a dropout RNG");
          c.masks[i] = dropout_mask<T>(x.shape(), l.keep_rate, *dropout_rng);
          y = kernels::dropout_apply(x, c.masks[i]);
        } else {
          y = x;
        }
        break;
    }
    c.activations.push_back(std::move(y));
  }
  if (cache) return c.activations.back();
  return std::move(c.activations.back());
}

template <typename T>
Gradients<T> Network<T>::backward(const ForwardCache<T>& cache, const Tensor<T>& d_pred) const {
  const std::size_t L = spec_.layers.size();
  if (cache.net_id != id_ || cache.version != version_ || cache.activations.size() != L + 1)
    throw StateError(spec_.name + ": forward cache is stale or belongs to another network");
  if (d_pred.shape() != cache.activations.back().shape())
    throw ShapeError("backward: d_pred shape " + shape_str(d_pred.shape()) + " does not match predictions " +
                     shape_str(cache.activations.back().shape()));

  Gradients<T> grads(L);
  Tensor<T> d = d_pred;
  for (std::size_t r = L; r-- > 0;) {
    const LayerSpec& l = spec_.layers[r];
    const Tensor<T>& x = cache.activations[r];
    const Tensor<T>& y = cache.activations[r + 1];
    switch (l.kind) {
      case LayerKind::conv: {
        auto g = kernels::conv2d_backward(x, params_[r].weight, y, d, l.relu);
        grads[r] = {std::move(g.d_weight), std::move(g.d_bias)};
        d = std::move(g.d_input);
        break;
      }
      case LayerKind::pool:
        d = kernels::maxpool2_backward(d, cache.argmax[r], x.shape());
        break;
      case LayerKind::fully_connected: {
        auto g = kernels::fc_backward(x, params_[r].weight, y, d, l.relu);
        grads[r] = {std::move(g.d_weight), std::move(g.d_bias)};
        d = std::move(g.d_input);
        break;
      }
      case LayerKind::dropout:
        if (!cache.masks[r].empty()) d = mul(d, cache.masks[r]);
        break;
    }
  }
  return grads;
}

template <typename T>
void Network<T>::sgd_step(const Gradients<T>& grads, const SgdParams& p) {
  if (!(p.lr > 0.0)) throw ArgumentError("sgd: lr must be > 0");
  if (!(p.momentum >= 0.0 && p.momentum < 1.0)) throw ArgumentError("sgd: momentum must lie in [0, 1)");
  if (!(p.weight_decay >= 0.0)) throw ArgumentError("sgd: weight_decay must be >= 0");
  if (grads.size() != params_.size()) throw ShapeError("sgd: gradient list does not match the network");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (grads[i].weight.shape() != params_[i].weight.shape() || grads[i].bias.shape() != params_[i].bias.shape())
      throw ShapeError("sgd: gradient shape mismatch at layer " + std::to_string(i + 1));
    if (!grads[i].weight.all_finite() || !grads[i].bias.all_finite())
      throw NumericError("sgd: non-finite gradient at layer " + std::to_string(i + 1));
  }

  std::size_t pi = 0;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!spec_.layers[i].has_params()) continue;
    const double mult = pi < p.layer_lr_mult.size() ? p.layer_lr_mult[pi] : 1.0;
    ++pi;
    const T lr = static_cast<T>(p.lr * mult), mu = static_cast<T>(p.momentum), wd = static_cast<T>(p.weight_decay);
    auto update = [&](Tensor<T>& w, Tensor<T>& v, const Tensor<T>& g) {
      for (std::size_t j = 0; j < w.size(); ++j) {
        v[j] = mu * v[j] - lr * (g[j] + wd * w[j]);
        w[j] += v[j];
      }
    };
    update(params_[i].weight, velocity_[i].weight, grads[i].weight);
    update(params_[i].bias, velocity_[i].bias, grads[i].bias);
    if (!params_[i].weight.all_finite() || !params_[i].bias.all_finite())
      throw NumericError("sgd: parameters became non-finite at layer " + std::to_string(i + 1));
  }
  ++version_;
}

template <typename T>
void Network<T>::reset_velocity() {
  for (auto& v : velocity_) {
    std::fill(v.weight.data().begin(), v.weight.data().end(), T{0});
    std::fill(v.bias.data().begin(), v.bias.data().end(), T{0});
  }
}

template <typename T>
Network<T> Network<T>::adapt_input(std::size_t new_channels, std::uint64_t seed, AdaptMode mode) const {
  if (new_channels == 0) throw ArgumentError("adapt_input: channel count must be >= 1");
  if (new_channels == in_channels_) return *this;

  Network<T> out(spec_, new_channels, seed);
  std::size_t first_conv = spec_.layers.size();
  for (std::size_t i = 0; i < spec_.layers.size(); ++i)
    if (spec_.layers[i].kind == LayerKind::conv) {
      first_conv = i;
      break;
    }
  for (std::size_t i = 0; i < spec_.layers.size(); ++i)
    if (i != first_conv) out.params_[i] = params_[i];

  if (mode == AdaptMode::replicate && first_conv < spec_.layers.size()) {
    const Tensor<T>& w = params_[first_conv].weight;
    Tensor<T>& nw = out.params_[first_conv].weight;
    const std::size_t M = w.dim(0), C = w.dim(1), k = w.dim(2);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          T s = 0;
          for (std::size_t c = 0; c < C; ++c) s += w.at(m, c, i, j);
          for (std::size_t c = 0; c < new_channels; ++c) nw.at(m, c, i, j) = s / static_cast<T>(new_channels);
        }
    out.params_[first_conv].bias = params_[first_conv].bias;
  }
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.weight.size() + p.bias.size();
  return n;
}

template <typename T>
Gradients<T> zero_gradients(const Network<T>& net) {
  Gradients<T> g(net.params().size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (net.params()[i].weight.empty()) continue;
    g[i].weight = Tensor<T>(net.params()[i].weight.shape());
    g[i].bias = Tensor<T>(net.params()[i].bias.shape());
  }
  return g;
}

template class Network<float>;
template class Network<double>;
template Gradients<float> zero_gradients(const Network<float>&);
template Gradients<double> zero_gradients(const Network<double>&);

}  // namespace fbp::nn
