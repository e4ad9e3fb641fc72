#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fbp/tensor.hpp"

namespace fbp::img {

// Free parameters of the weighted-least-squares edge-preserving smoother.
struct WlsParams {
  double lambda = 0.125;  // smoothness weight
  double alpha = 1.2;     // gradient sensitivity exponent
  double eps = 1e-4;      // keeps weights finite on flat regions
  double cg_tol = 1e-6;   // relative residual ||b - Au|| / ||b||
  std::size_t cg_max_iters = 0;  // 0 means 10 * H * W

  void validate() const;
};

// Log-luminance guide: log10(clamp(L / 100, 0, 1) + 0.01).
Tensor<double> wls_guide(const Tensor<double>& L);

// The SPD system (I + lambda * A) u = L, where A is the graph Laplacian of
// the 4-neighbour grid with edge weights (|d guide|^alpha + eps)^-1. Edges
// only join in-image neighbours, so borders use one-sided differences.
struct WlsSystem {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> wx;  // lambda * a_x for the edge (y,x)-(y,x+1), H x (W-1)
  std::vector<double> wy;  // lambda * a_y for the edge (y,x)-(y+1,x), (H-1) x W
  std::vector<double> diag;

  std::size_t size() const { return height * width; }
  void apply(std::span<const double> u, std::span<double> out) const;
  void apply_serial(std::span<const double> u, std::span<double> out) const;
};

WlsSystem build_wls_system(const Tensor<double>& L, const WlsParams& p);

struct CgStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients started from x (in/out).
// Throws ConvergenceError when cg_max_iters is exhausted.
CgStats solve_cg(const WlsSystem& sys, std::span<const double> b, std::span<double> x, double tol,
                 std::size_t max_iters);

// Piecewise-smooth base layer of an L plane [1,H,W].
Tensor<double> wls_base(const Tensor<double>& L, const WlsParams& p, CgStats* stats = nullptr);

// Sum of absolute horizontal and vertical neighbour differences.
double total_variation(const Tensor<double>& plane);

}  // namespace fbp::img
