#pragma once

// Reference computations written independently of the library, shared by
// the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "fbp/imageproc/wls.hpp"
#include "fbp/tensor.hpp"

namespace fbp::oracle {

// Assembles (I + lambda A) from the energy
//   sum_p (u_p - L_p)^2 + lambda sum_edges a_e (u_i - u_j)^2,
// a_e = 1 / (|l_i - l_j|^alpha + eps), l = log10(clamp(L/100) + 0.01),
// and solves it by Cholesky.
inline std::vector<double> dense_wls(const Tensor<double>& L, const img::WlsParams& p) {
  const std::size_t H = L.dim(1), W = L.dim(2), n = H * W;
  std::vector<double> A(n * n, 0.0), l(n);
  for (std::size_t i = 0; i < n; ++i) {
    A[i * n + i] = 1.0;
    l[i] = std::log10(std::min(std::max(L[i] / 100.0, 0.0), 1.0) + 0.01);
  }
  auto edge = [&](std::size_t i, std::size_t j) {
    const double w = p.lambda / (std::pow(std::abs(l[i] - l[j]), p.alpha) + p.eps);
    A[i * n + i] += w;
    A[j * n + j] += w;
    A[i * n + j] -= w;
    A[j * n + i] -= w;
  };
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      if (x + 1 < W) edge(y * W + x, y * W + x + 1);
      if (y + 1 < H) edge(y * W + x, (y + 1) * W + x);
    }
  // In-place Cholesky A = R R^T (lower).
  for (std::size_t j = 0; j < n; ++j) {
    double d = A[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= A[j * n + k] * A[j * n + k];
    A[j * n + j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = A[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= A[i * n + k] * A[j * n + k];
      A[i * n + j] = s / A[j * n + j];
    }
  }
  std::vector<double> u(L.data().begin(), L.data().end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) u[i] -= A[i * n + k] * u[k];
    u[i] /= A[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) u[i] -= A[k * n + i] * u[k];
    u[i] /= A[i * n + i];
  }
  return u;
}

// Textbook two-pass Pearson.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// |a - n| / max(|a|, |n|); both count as equal below the finite-difference
// noise floor.
inline double rel_err(double a, double n) {
  const double m = std::max(std::abs(a), std::abs(n));
  return m < 1e-9 ? 0.0 : std::abs(a - n) / m;
}

// Central difference of f with respect to x, restoring x afterwards.
inline double central(const std::function<double()>& f, double& x, double h = 1e-4) {
  const double keep = x;
  x = keep + h;
  const double up = f();
  x = keep - h;
  const double down = f();
  x = keep;
  return (up - down) / (2 * h);
}

// Worst relative error of `analytic` against central differences over
// every entry of `param`.
template <typename Fn>
double max_rel_over(Tensor<double>& param, const Tensor<double>& analytic, const Fn& f) {
  double worst = 0.0;
  for (std::size_t i = 0; i < param.size(); ++i) worst = std::max(worst, rel_err(analytic[i], central(f, param[i])));
  return worst;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace fbp::oracle
