#include "fbp/net/kernels.hpp"

#include <algorithm>
#include <cstring>

namespace fbp::nn {

namespace {

using idx = std::ptrdiff_t;

template <typename T>
void check_conv(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (input.rank() != 4) throw ShapeError("conv2d: input must be [N,C,H,W], got " + shape_str(input.shape()));
  if (weight.rank() != 4 || weight.dim(2) != weight.dim(3))
    throw ShapeError("conv2d: weight must be [M,C,k,k], got " + shape_str(weight.shape()));
  if (weight.dim(1) != input.dim(1))
    throw ShapeError("conv2d: weight expects " + std::to_string(weight.dim(1)) + " channels, input has " +
                     std::to_string(input.dim(1)));
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0)) throw ShapeError("conv2d: bias must be [M]");
  if (weight.dim(2) > input.dim(2) || weight.dim(3) > input.dim(3)) throw ShapeError("conv2d: kernel larger than input");
}

template <typename T>
std::size_t flat_features(const Tensor<T>& input) {
  return input.size() / input.dim(0);
}

template <typename T>
void check_fc(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2) throw ShapeError("fc: weight must be [O,F], got " + shape_str(weight.shape()));
  if (flat_features(input) != weight.dim(1))
    throw ShapeError("fc: input has " + std::to_string(flat_features(input)) + " features per sample, weight expects " +
                     std::to_string(weight.dim(1)));
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0)) throw ShapeError("fc: bias must be [O]");
}

template <typename T>
Tensor<T> relu_masked(const Tensor<T>& output, const Tensor<T>& d_output, bool relu) {
  if (output.shape() != d_output.shape())
    throw ShapeError("backward: gradient shape " + shape_str(d_output.shape()) + " does not match output " +
                     shape_str(output.shape()));
  Tensor<T> d = d_output;
  if (relu)
    for (std::size_t i = 0; i < d.size(); ++i)
      if (!(output[i] > T{0})) d[i] = T{0};
  return d;
}

}  // namespace

template <typename T>
LossResult<T> euclidean_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.empty() || target.empty()) throw ArgumentError("euclidean_loss: empty batch");
  if (pred.shape() != target.shape())
    throw ShapeError("euclidean_loss: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  const double n = static_cast<double>(pred.dim(0));
  LossResult<T> r{0.0, Tensor<T>(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    r.loss += diff * diff;
    r.grad[i] = static_cast<T>(diff / n);
  }
  r.loss /= 2.0 * n;
  return r;
}

template <typename T>
Tensor<T> dropout_mask(const Shape& shape, double keep, Rng& rng) {
  if (!(keep > 0.0 && keep <= 1.0)) throw ArgumentError("dropout keep rate must lie in (0, 1]");
  Tensor<T> m(shape);
  const T on = static_cast<T>(1.0 / keep);
  for (auto& v : m.data()) v = rng.next_double() < keep ? on : T{0};
  return m;
}

namespace kernels {

template <typename T>
void gemm_acc(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
  constexpr std::size_t MB = 8, KB = 128;
  const idx blocks = static_cast<idx>((M + MB - 1) / MB);
#pragma omp parallel for schedule(static)
  for (idx mb = 0; mb < blocks; ++mb) {
    const std::size_t m0 = static_cast<std::size_t>(mb) * MB, m1 = std::min(M, m0 + MB);
    for (std::size_t k0 = 0; k0 < K; k0 += KB) {
      const std::size_t k1 = std::min(K, k0 + KB);
      for (std::size_t m = m0; m < m1; ++m) {
        T* __restrict c = C + m * N;
        for (std::size_t k = k0; k < k1; ++k) {
          const T a = A[m * K + k];
          const T* __restrict b = B + k * N;
          for (std::size_t j = 0; j < N; ++j) c[j] += a * b[j];
        }
      }
    }
  }
}

template <typename T>
void gemm_tn_acc(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
  constexpr std::size_t MB = 8, KB = 128;
  const idx blocks = static_cast<idx>((M + MB - 1) / MB);
#pragma omp parallel for schedule(static)
  for (idx mb = 0; mb < blocks; ++mb) {
    const std::size_t m0 = static_cast<std::size_t>(mb) * MB, m1 = std::min(M, m0 + MB);
    for (std::size_t k0 = 0; k0 < K; k0 += KB) {
      const std::size_t k1 = std::min(K, k0 + KB);
      for (std::size_t m = m0; m < m1; ++m) {
        T* __restrict c = C + m * N;
        for (std::size_t k = k0; k < k1; ++k) {
          const T a = A[k * M + m];
          const T* __restrict b = B + k * N;
          for (std::size_t j = 0; j < N; ++j) c[j] += a * b[j];
        }
      }
    }
  }
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, bool relu) {
  check_conv(input, weight, bias);
  const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t M = weight.dim(0), k = weight.dim(2);
  const std::size_t OH = H - k + 1, OW = W - k + 1, P = OH * OW, KK = C * k * k;

  Tensor<T> out({N, M, OH, OW});
  std::vector<T> col(KK * P);
  for (std::size_t n = 0; n < N; ++n) {
    const T* in = input.ptr() + n * C * H * W;
#pragma omp parallel for schedule(static)
    for (idx r = 0; r < static_cast<idx>(KK); ++r) {
      const std::size_t c = static_cast<std::size_t>(r) / (k * k), i = (static_cast<std::size_t>(r) / k) % k,
                        j = static_cast<std::size_t>(r) % k;
      T* dst = col.data() + static_cast<std::size_t>(r) * P;
      for (std::size_t oy = 0; oy < OH; ++oy)
        std::memcpy(dst + oy * OW, in + (c * H + oy + i) * W + j, OW * sizeof(T));
    }
    T* o = out.ptr() + n * M * P;
    for (std::size_t m = 0; m < M; ++m) std::fill(o + m * P, o + (m + 1) * P, bias[m]);
    gemm_acc(M, P, KK, weight.ptr(), col.data(), o);
    if (relu)
      for (std::size_t i = 0; i < M * P; ++i) o[i] = std::max(o[i], T{0});
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& output,
                             const Tensor<T>& d_output, bool relu) {
  check_conv(input, weight, Tensor<T>({weight.dim(0)}));
  const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t M = weight.dim(0), k = weight.dim(2);
  const std::size_t OH = H - k + 1, OW = W - k + 1, P = OH * OW, KK = C * k * k;
  if (output.shape() != Shape{N, M, OH, OW}) throw ShapeError("conv2d_backward: output shape mismatch");
  const Tensor<T> d = relu_masked(output, d_output, relu);

  ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(weight.shape()), Tensor<T>({M})};
#pragma omp parallel for schedule(static)
  for (idx m = 0; m < static_cast<idx>(M); ++m) {
    T s = 0;
    for (std::size_t n = 0; n < N; ++n) {
      const T* dp = d.ptr() + (n * M + static_cast<std::size_t>(m)) * P;
      for (std::size_t p = 0; p < P; ++p) s += dp[p];
    }
    g.d_bias[static_cast<std::size_t>(m)] = s;
  }

  std::vector<T> rows(P * KK), drows(P * KK);
  for (std::size_t n = 0; n < N; ++n) {
    const T* in = input.ptr() + n * C * H * W;
    const T* dn = d.ptr() + n * M * P;
#pragma omp parallel for schedule(static)
    for (idx pp = 0; pp < static_cast<idx>(P); ++pp) {
      const std::size_t p = static_cast<std::size_t>(pp), oy = p / OW, ox = p % OW;
      T* dst = rows.data() + p * KK;
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < k; ++i) {
          std::memcpy(dst, in + (c * H + oy + i) * W + ox, k * sizeof(T));
          dst += k;
        }
    }
    gemm_acc(M, KK, P, dn, rows.data(), g.d_weight.ptr());

    std::fill(drows.begin(), drows.end(), T{0});
    gemm_tn_acc(P, KK, M, dn, weight.ptr(), drows.data());
    T* din = g.d_input.ptr() + n * C * H * W;
#pragma omp parallel for schedule(static)
    for (idx cc = 0; cc < static_cast<idx>(C); ++cc) {
      const std::size_t c = static_cast<std::size_t>(cc);
      for (std::size_t p = 0; p < P; ++p) {
        const std::size_t oy = p / OW, ox = p % OW;
        const T* src = drows.data() + p * KK + c * k * k;
        for (std::size_t i = 0; i < k; ++i) {
          T* row = din + (c * H + oy + i) * W + ox;
          for (std::size_t j = 0; j < k; ++j) row[j] += src[i * k + j];
        }
      }
    }
  }
  return g;
}

template <typename T>
PoolResult<T> maxpool2_forward(const Tensor<T>& input) {
  if (input.rank() != 4) throw ShapeError("maxpool2: input must be [N,C,H,W]");
  const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t OH = H / 2, OW = W / 2;
  if (OH == 0 || OW == 0) throw ShapeError("maxpool2: input smaller than 2x2");
  PoolResult<T> r{Tensor<T>({N, C, OH, OW}), std::vector<std::uint32_t>(N * C * OH * OW)};
#pragma omp parallel for schedule(static)
  for (idx plane = 0; plane < static_cast<idx>(N * C); ++plane) {
    const std::size_t base = static_cast<std::size_t>(plane) * H * W;
    const std::size_t obase = static_cast<std::size_t>(plane) * OH * OW;
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        std::size_t best = base + 2 * oy * W + 2 * ox;
        const std::size_t cand[3] = {best + 1, best + W, best + W + 1};
        for (std::size_t c : cand)
          if (input[c] > input[best]) best = c;
        r.output[obase + oy * OW + ox] = input[best];
        r.argmax[obase + oy * OW + ox] = static_cast<std::uint32_t>(best);
      }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& d_output, const std::vector<std::uint32_t>& argmax,
                            const Shape& input_shape) {
  if (d_output.size() != argmax.size()) throw ShapeError("maxpool2_backward: argmax does not match gradient");
  Tensor<T> din(input_shape);
  const std::size_t planes = d_output.dim(0) * d_output.dim(1);
  const std::size_t per = d_output.size() / planes;
#pragma omp parallel for schedule(static)
  for (idx plane = 0; plane < static_cast<idx>(planes); ++plane)
    for (std::size_t i = static_cast<std::size_t>(plane) * per; i < (static_cast<std::size_t>(plane) + 1) * per; ++i)
      din[argmax[i]] += d_output[i];
  return din;
}

template <typename T>
Tensor<T> fc_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, bool relu) {
  check_fc(input, weight, bias);
  const std::size_t N = input.dim(0), F = weight.dim(1), O = weight.dim(0);
  Tensor<T> out({N, O});
#pragma omp parallel for schedule(static)
  for (idx no = 0; no < static_cast<idx>(N * O); ++no) {
    const std::size_t n = static_cast<std::size_t>(no) / O, o = static_cast<std::size_t>(no) % O;
    const T* x = input.ptr() + n * F;
    const T* w = weight.ptr() + o * F;
    T acc[4] = {0, 0, 0, 0};
    std::size_t f = 0;
    for (; f + 4 <= F; f += 4)
      for (std::size_t l = 0; l < 4; ++l) acc[l] += w[f + l] * x[f + l];
    for (; f < F; ++f) acc[0] += w[f] * x[f];
    T s = bias[o] + ((acc[0] + acc[1]) + (acc[2] + acc[3]));
    out[static_cast<std::size_t>(no)] = relu ? std::max(s, T{0}) : s;
  }
  return out;
}

template <typename T>
FcGrads<T> fc_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& output,
                       const Tensor<T>& d_output, bool relu) {
  check_fc(input, weight, Tensor<T>({weight.dim(0)}));
  const std::size_t N = input.dim(0), F = weight.dim(1), O = weight.dim(0);
  const Tensor<T> d = relu_masked(output, d_output, relu);
  FcGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(weight.shape()), Tensor<T>({O})};
  for (std::size_t o = 0; o < O; ++o) {
    T s = 0;
    for (std::size_t n = 0; n < N; ++n) s += d[n * O + o];
    g.d_bias[o] = s;
  }
  gemm_tn_acc(O, F, N, d.ptr(), input.ptr(), g.d_weight.ptr());
  gemm_acc(N, F, O, d.ptr(), weight.ptr(), g.d_input.ptr());
  return g;
}

template <typename T>
Tensor<T> dropout_apply(const Tensor<T>& input, const Tensor<T>& mask) {
  return mul(input, mask);
}

}  // namespace kernels

namespace reference {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, bool relu) {
  check_conv(input, weight, bias);
  const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t M = weight.dim(0), k = weight.dim(2), OH = H - k + 1, OW = W - k + 1;
  Tensor<T> out({N, M, OH, OW});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t y = 0; y < OH; ++y)
        for (std::size_t x = 0; x < OW; ++x) {
          T s = bias[m];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < k; ++i)
              for (std::size_t j = 0; j < k; ++j) s += weight.at(m, c, i, j) * input.at(n, c, y + i, x + j);
          out.at(n, m, y, x) = relu ? std::max(s, T{0}) : s;
        }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& output,
                             const Tensor<T>& d_output, bool relu) {
  check_conv(input, weight, Tensor<T>({weight.dim(0)}));
  const std::size_t N = input.dim(0), C = input.dim(1);
  const std::size_t M = weight.dim(0), k = weight.dim(2), OH = output.dim(2), OW = output.dim(3);
  const Tensor<T> d = relu_masked(output, d_output, relu);
  ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(weight.shape()), Tensor<T>({M})};
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t y = 0; y < OH; ++y)
        for (std::size_t x = 0; x < OW; ++x) {
          const T dv = d.at(n, m, y, x);
          g.d_bias[m] += dv;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < k; ++i)
              for (std::size_t j = 0; j < k; ++j) {
                g.d_weight.at(m, c, i, j) += dv * input.at(n, c, y + i, x + j);
                g.d_input.at(n, c, y + i, x + j) += dv * weight.at(m, c, i, j);
              }
        }
  return g;
}

template <typename T>
PoolResult<T> maxpool2_forward(const Tensor<T>& input) {
  if (input.rank() != 4) throw ShapeError("maxpool2: input must be [N,C,H,W]");
  const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t OH = H / 2, OW = W / 2;
  if (OH == 0 || OW == 0) throw ShapeError("maxpool2: input smaller than 2x2");
  PoolResult<T> r{Tensor<T>({N, C, OH, OW}), {}};
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < OH; ++y)
        for (std::size_t x = 0; x < OW; ++x) {
          std::size_t by = 2 * y, bx = 2 * x;
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx)
              if (input.at(n, c, 2 * y + dy, 2 * x + dx) > input.at(n, c, by, bx)) {
                by = 2 * y + dy;
                bx = 2 * x + dx;
              }
          r.output.at(n, c, y, x) = input.at(n, c, by, bx);
          r.argmax.push_back(static_cast<std::uint32_t>(((n * C + c) * H + by) * W + bx));
        }
  return r;
}

template <typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& d_output, const std::vector<std::uint32_t>& argmax,
                            const Shape& input_shape) {
  if (d_output.size() != argmax.size()) throw ShapeError("maxpool2_backward: argmax does not match gradient");
  Tensor<T> din(input_shape);
  for (std::size_t i = 0; i < d_output.size(); ++i) din[argmax[i]] += d_output[i];
  return din;
}

template <typename T>
Tensor<T> fc_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, bool relu) {
  check_fc(input, weight, bias);
  const std::size_t N = input.dim(0), F = weight.dim(1), O = weight.dim(0);
  Tensor<T> out({N, O});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o) {
      T s = bias[o];
      for (std::size_t f = 0; f < F; ++f) s += weight[o * F + f] * input[n * F + f];
      out[n * O + o] = relu ? std::max(s, T{0}) : s;
    }
  return out;
}

template <typename T>
FcGrads<T> fc_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& output,
                       const Tensor<T>& d_output, bool relu) {
  check_fc(input, weight, Tensor<T>({weight.dim(0)}));
  const std::size_t N = input.dim(0), F = weight.dim(1), O = weight.dim(0);
  const Tensor<T> d = relu_masked(output, d_output, relu);
  FcGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(weight.shape()), Tensor<T>({O})};
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o) {
      const T dv = d[n * O + o];
      g.d_bias[o] += dv;
      for (std::size_t f = 0; f < F; ++f) {
        g.d_weight[o * F + f] += dv * input[n * F + f];
        g.d_input[n * F + f] += dv * weight[o * F + f];
      }
    }
  return g;
}

}  // namespace reference

#define FBP_INSTANTIATE_KERNELS(T)                                                                              \
  template LossResult<T> euclidean_loss(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> dropout_mask<T>(const Shape&, double, Rng&);                                               \
  template void kernels::gemm_acc(std::size_t, std::size_t, std::size_t, const T*, const T*, T*);              \
  template void kernels::gemm_tn_acc(std::size_t, std::size_t, std::size_t, const T*, const T*, T*);           \
  template Tensor<T> kernels::conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool);      \
  template ConvGrads<T> kernels::conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                                 const Tensor<T>&, bool);                                      \
  template PoolResult<T> kernels::maxpool2_forward(const Tensor<T>&);                                           \
  template Tensor<T> kernels::maxpool2_backward(const Tensor<T>&, const std::vector<std::uint32_t>&,            \
                                                const Shape&);                                                 \
  template Tensor<T> kernels::fc_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool);          \
  template FcGrads<T> kernels::fc_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,               \
                                           const Tensor<T>&, bool);                                            \
  template Tensor<T> kernels::dropout_apply(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> reference::conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool);    \
  template ConvGrads<T> reference::conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                                   const Tensor<T>&, bool);                                    \
  template PoolResult<T> reference::maxpool2_forward(const Tensor<T>&);                                         \
  template Tensor<T> reference::maxpool2_backward(const Tensor<T>&, const std::vector<std::uint32_t>&,          \
                                                  const Shape&);                                               \
  template Tensor<T> reference::fc_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool);        \
  template FcGrads<T> reference::fc_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,             \
                                             const Tensor<T>&, bool);

FBP_INSTANTIATE_KERNELS(float)
FBP_INSTANTIATE_KERNELS(double)

}  // namespace fbp::nn
