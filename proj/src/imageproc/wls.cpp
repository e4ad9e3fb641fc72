#include "fbp/imageproc/wls.hpp"

#include <algorithm>
#include <cmath>

namespace fbp::img {

void WlsParams::validate() const {
  if (!(lambda >= 0.0)) throw ArgumentError("wls: lambda must be >= 0");
  if (!(alpha > 0.0)) throw ArgumentError("wls: alpha must be > 0");
  if (!(eps > 0.0)) throw ArgumentError("wls: eps must be > 0");
  if (!(cg_tol > 0.0 && cg_tol < 1.0)) throw ArgumentError("wls: cg_tol must lie in (0, 1)");
}

namespace {

void check_plane(const Tensor<double>& L) {
  if (L.rank() != 3 || L.dim(0) != 1) throw ShapeError("wls expects a [1,H,W] plane, got " + shape_str(L.shape()));
  if (!L.all_finite()) throw NumericError("wls: input plane has non-finite values");
}

// Row-blocked dot product: one partial per row, summed in row order, so
// the result does not depend on the thread count.
double dot(std::span<const double> a, std::span<const double> b, std::size_t rows, std::size_t cols,
           std::vector<double>& partial) {
  partial.assign(rows, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(rows); ++y) {
    const std::size_t base = static_cast<std::size_t>(y) * cols;
    double s = 0.0;
    for (std::size_t x = 0; x < cols; ++x) s += a[base + x] * b[base + x];
    partial[static_cast<std::size_t>(y)] = s;
  }
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

}  // namespace

Tensor<double> wls_guide(const Tensor<double>& L) {
  Tensor<double> g(L.shape());
  for (std::size_t i = 0; i < L.size(); ++i) g[i] = std::log10(std::clamp(L[i] / 100.0, 0.0, 1.0) + 0.01);
  return g;
}

WlsSystem build_wls_system(const Tensor<double>& L, const WlsParams& p) {
  check_plane(L);
  p.validate();
  const std::size_t H = L.dim(1), W = L.dim(2);
  const Tensor<double> g = wls_guide(L);

  WlsSystem s;
  s.height = H;
  s.width = W;
  s.wx.assign(H * (W > 0 ? W - 1 : 0), 0.0);
  s.wy.assign((H > 0 ? H - 1 : 0) * W, 0.0);
  auto weight = [&](double d) { return p.lambda / (std::pow(std::abs(d), p.alpha) + p.eps); };
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x + 1 < W; ++x) s.wx[y * (W - 1) + x] = weight(g[y * W + x + 1] - g[y * W + x]);
  for (std::size_t y = 0; y + 1 < H; ++y)
    for (std::size_t x = 0; x < W; ++x) s.wy[y * W + x] = weight(g[(y + 1) * W + x] - g[y * W + x]);

  s.diag.assign(H * W, 1.0);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      double d = 1.0;
      if (x > 0) d += s.wx[y * (W - 1) + x - 1];
      if (x + 1 < W) d += s.wx[y * (W - 1) + x];
      if (y > 0) d += s.wy[(y - 1) * W + x];
      if (y + 1 < H) d += s.wy[y * W + x];
      s.diag[y * W + x] = d;
    }
  return s;
}

namespace {

inline double apply_row_entry(const WlsSystem& s, std::span<const double> u, std::size_t y, std::size_t x) {
  const std::size_t H = s.height, W = s.width, i = y * W + x;
  double v = s.diag[i] * u[i];
  if (x > 0) v -= s.wx[y * (W - 1) + x - 1] * u[i - 1];
  if (x + 1 < W) v -= s.wx[y * (W - 1) + x] * u[i + 1];
  if (y > 0) v -= s.wy[(y - 1) * W + x] * u[i - W];
  if (y + 1 < H) v -= s.wy[y * W + x] * u[i + W];
  return v;
}

}  // namespace

void WlsSystem::apply(std::span<const double> u, std::span<double> out) const {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(height); ++y)
    for (std::size_t x = 0; x < width; ++x)
      out[static_cast<std::size_t>(y) * width + x] = apply_row_entry(*this, u, static_cast<std::size_t>(y), x);
}

void WlsSystem::apply_serial(std::span<const double> u, std::span<double> out) const {
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) out[y * width + x] = apply_row_entry(*this, u, y, x);
}

CgStats solve_cg(const WlsSystem& sys, std::span<const double> b, std::span<double> x, double tol,
                 std::size_t max_iters) {
  const std::size_t n = sys.size(), rows = sys.height, cols = sys.width;
  std::vector<double> r(n), z(n), p(n), Ap(n), partial;

  const double bnorm = std::sqrt(dot(b, b, rows, cols, partial));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {};
  }

  sys.apply(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / sys.diag[i];
  p = z;
  double rz = dot(r, z, rows, cols, partial);
  double rel = std::sqrt(dot(r, r, rows, cols, partial)) / bnorm;

  CgStats st;
  while (rel > tol) {
    if (st.iterations >= max_iters)
      throw ConvergenceError("wls: conjugate gradients did not reach tolerance after " +
                                 std::to_string(st.iterations) + " iterations (residual " + std::to_string(rel) + ")",
                             rel);
    sys.apply(p, Ap);
    const double alpha = rz / dot(p, Ap, rows, cols, partial);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
      z[i] = r[i] / sys.diag[i];
    }
    const double rz_next = dot(r, z, rows, cols, partial);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rel = std::sqrt(dot(r, r, rows, cols, partial)) / bnorm;
    ++st.iterations;
  }
  st.relative_residual = rel;
  return st;
}

Tensor<double> wls_base(const Tensor<double>& L, const WlsParams& p, CgStats* stats) {
  check_plane(L);
  p.validate();
  if (p.lambda == 0.0) {
    if (stats) *stats = {};
    return L;
  }
  const WlsSystem sys = build_wls_system(L, p);
  const std::size_t max_iters = p.cg_max_iters ? p.cg_max_iters : 10 * sys.size();
  // Starting from L makes constant planes an exact fixed point (zero residual).
  Tensor<double> u = L;
  const CgStats st = solve_cg(sys, L.data(), u.data(), p.cg_tol, max_iters);
  if (stats) *stats = st;
  return u;
}

double total_variation(const Tensor<double>& plane) {
  if (plane.rank() != 3) throw ShapeError("total_variation expects [C,H,W]");
  const std::size_t C = plane.dim(0), H = plane.dim(1), W = plane.dim(2);
  double tv = 0.0;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        if (x + 1 < W) tv += std::abs(plane.at(c, y, x + 1) - plane.at(c, y, x));
        if (y + 1 < H) tv += std::abs(plane.at(c, y + 1, x) - plane.at(c, y, x));
      }
  return tv;
}

}  // namespace fbp::img
