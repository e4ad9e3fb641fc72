#pragma once

#include <cstdint>
#include <vector>

#include "fbp/tensor.hpp"

// Layer kernels with hand-derived gradients.
//
// fbp::nn::kernels holds the OpenMP versions used for training. Every
// parallel loop writes disjoint outputs and accumulates each output in a
// fixed order, so results are bit-identical for any thread count.
// fbp::nn::reference holds direct serial loops with the same signatures;
// they are kept as the oracle for tests and as the benchmark baseline.

namespace fbp::nn {

template <typename T>
struct ConvGrads {
  Tensor<T> d_input;
  Tensor<T> d_weight;
  Tensor<T> d_bias;
};

template <typename T>
using FcGrads = ConvGrads<T>;

template <typename T>
struct PoolResult {
  Tensor<T> output;
  std::vector<std::uint32_t> argmax;  // flat input index chosen for each output element
};

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;
};

// loss = (1 / 2N) * sum (pred - target)^2, grad = (pred - target) / N.
template <typename T>
LossResult<T> euclidean_loss(const Tensor<T>& pred, const Tensor<T>& target);

// Inverted-dropout mask: each entry is 1/keep with probability keep, else 0.
template <typename T>
Tensor<T> dropout_mask(const Shape& shape, double keep, Rng& rng);

namespace kernels {

// input [N,C,H,W], weight [M,C,k,k], bias [M] -> [N,M,H-k+1,W-k+1].
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, bool relu);

// `output` is the (post-activation) forward result; with relu the incoming
// gradient is masked where output <= 0.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& output,
                             const Tensor<T>& d_output, bool relu);

// Non-overlapping 2x2 max pooling, floor on odd extents, first maximum wins.
template <typename T>
PoolResult<T> maxpool2_forward(const Tensor<T>& input);

template <typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& d_output, const std::vector<std::uint32_t>& argmax,
                            const Shape& input_shape);

// input [N,F,...] flattened per sample, weight [O,F], bias [O] -> [N,O].
template <typename T>
Tensor<T> fc_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, bool relu);

template <typename T>
FcGrads<T> fc_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& output,
                       const Tensor<T>& d_output, bool relu);

template <typename T>
Tensor<T> dropout_apply(const Tensor<T>& input, const Tensor<T>& mask);

// C[M,N] += A[M,K] * B[K,N], all row-major and densely packed.
template <typename T>
void gemm_acc(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C);

// C[M,N] += A[K,M]^T * B[K,N].
template <typename T>
void gemm_tn_acc(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C);

}  // namespace kernels

namespace reference {

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, bool relu);
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& output,
                             const Tensor<T>& d_output, bool relu);
template <typename T>
PoolResult<T> maxpool2_forward(const Tensor<T>& input);
template <typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& d_output, const std::vector<std::uint32_t>& argmax,
                            const Shape& input_shape);
template <typename T>
Tensor<T> fc_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, bool relu);
template <typename T>
FcGrads<T> fc_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& output,
                       const Tensor<T>& d_output, bool relu);

}  // namespace reference

}  // namespace fbp::nn
