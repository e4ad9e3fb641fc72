#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "fbp/error.hpp"
#include "fbp/rng.hpp"

namespace fbp {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

inline void check_shape(const Shape& s) {
  if (s.empty() || s.size() > 4) throw ShapeError("tensor rank must be 1..4, got shape " + shape_str(s));
  for (auto e : s)
    if (e == 0) throw ShapeError("tensor extents must be >= 1, got shape " + shape_str(s));
}

inline std::size_t shape_numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
}

// Dense row-major array of rank 1..4. Rank-4 tensors use [batch, channel,
// height, width]; rank-3 tensors are [channel, height, width].
template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>, "Tensor element type must be floating point");

 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_numel(shape_), T{0});
  }

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_numel(shape_))
      throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_str(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor filled(Shape shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t c, std::size_t h, std::size_t w) { return data_[offset3(c, h, w)]; }
  const T& at(std::size_t c, std::size_t h, std::size_t w) const { return data_[offset3(c, h, w)]; }
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) { return data_[offset4(n, c, h, w)]; }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[offset4(n, c, h, w)];
  }

  // Same data, new shape of equal element count.
  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t offset3(std::size_t c, std::size_t h, std::size_t w) const {
    return (c * shape_[1] + h) * shape_[2] + w;
  }
  std::size_t offset4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return ((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  Shape shape_;
  std::vector<T> data_;
};

// ---- elementwise ----------------------------------------------------------

enum class ElementOp { add, sub, mul };

template <typename T>
Tensor<T> elementwise(ElementOp op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("elementwise: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    switch (op) {
      case ElementOp::add: out[i] = a[i] + b[i]; break;
      case ElementOp::sub: out[i] = a[i] - b[i]; break;
      case ElementOp::mul: out[i] = a[i] * b[i]; break;
    }
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(ElementOp::add, a, b); }
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(ElementOp::sub, a, b); }
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(ElementOp::mul, a, b); }

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

// ---- reductions -----------------------------------------------------------

template <typename T>
double sum(const Tensor<T>& a) {
  if (a.empty()) throw ShapeError("sum of empty tensor");
  double s = 0.0;
  for (T v : a.data()) s += v;
  return s;
}

template <typename T>
double mean(const Tensor<T>& a) {
  return sum(a) / static_cast<double>(a.size());
}

template <typename T>
double max(const Tensor<T>& a) {
  if (a.empty()) throw ShapeError("max of empty tensor");
  return *std::max_element(a.data().begin(), a.data().end());
}

// ---- windows --------------------------------------------------------------

// Copies the [top, top+h) x [left, left+w) window of every channel of a
// [C,H,W] tensor.
template <typename T>
Tensor<T> crop2d(const Tensor<T>& a, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  if (a.rank() != 3) throw ShapeError("crop2d expects [C,H,W], got " + shape_str(a.shape()));
  const std::size_t C = a.dim(0), H = a.dim(1), W = a.dim(2);
  if (h == 0 || w == 0 || top + h > H || left + w > W)
    throw BoundsError("crop2d window (" + std::to_string(top) + "," + std::to_string(left) + ") " +
                      std::to_string(h) + "x" + std::to_string(w) + " outside " + std::to_string(H) + "x" +
                      std::to_string(W));
  Tensor<T> out({C, h, w});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < h; ++y) {
      const T* src = &a.at(c, top + y, left);
      std::copy(src, src + w, &out.at(c, y, 0));
    }
  return out;
}

// ---- random ---------------------------------------------------------------

template <typename T>
Tensor<T> rng_uniform(Rng& rng, Shape shape, double lo, double hi) {
  if (!(lo < hi)) throw ArgumentError("rng_uniform requires lo < hi");
  Tensor<T> out(std::move(shape));
  // Rounding to T can land on hi; nudge those back inside [lo, hi).
  const T top = std::nextafter(static_cast<T>(hi), static_cast<T>(lo));
  for (auto& v : out.data()) {
    T x = static_cast<T>(lo + (hi - lo) * rng.next_double());
    if (x >= static_cast<T>(hi)) x = top;
    if (x < static_cast<T>(lo)) x = static_cast<T>(lo);
    v = x;
  }
  return out;
}

inline std::size_t rng_randint(Rng& rng, std::size_t n) {
  if (n < 1) throw ArgumentError("rng_randint requires n >= 1");
  return static_cast<std::size_t>(rng.next_below(n));
}

}  // namespace fbp
