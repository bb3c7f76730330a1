#include "rpx/tv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rpx {
namespace {

// Strides of the column-major grid along each axis.
std::array<Index, 3> strides(const DiffOperator& op) {
  return {1, op.height, op.height * op.width};
}

std::array<Index, 3> extents(const DiffOperator& op) {
  return {op.height, op.width, op.depth};
}

double power_iteration_norm_sq(const DiffOperator& op, int iters) {
  const Index n = op.pixels();
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n), Dv(op.D.rows()), w(n);
  for (double& e : v) e = gauss(rng);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    const double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    for (double& e : v) e /= nv;
    op.apply(v, Dv);
    op.apply_t(Dv, w);
    lambda = dot(v, w);
    v.swap(w);
  }
  return lambda;
}

}  // namespace

void DiffOperator::apply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != pixels() || out.size() != dim * pixels())
    throw DimensionError("DiffOperator::apply: dimension mismatch");
  const auto st = strides(*this);
  const auto ex = extents(*this);
  Index p = 0;
  for (Index k = 0; k < depth; ++k)
    for (Index j = 0; j < width; ++j)
      for (Index i = 0; i < height; ++i, ++p) {
        const Index coord[3] = {i, j, k};
        for (Index a = 0; a < dim; ++a)
          out[dim * p + a] = coord[a] + 1 < ex[a] ? x[p + st[a]] - x[p] : 0.0;
      }
}

void DiffOperator::apply_t(std::span<const double> q, std::span<double> out) const {
  if (q.size() != dim * pixels() || out.size() != pixels())
    throw DimensionError("DiffOperator::apply_t: dimension mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  const auto st = strides(*this);
  const auto ex = extents(*this);
  Index p = 0;
  for (Index k = 0; k < depth; ++k)
    for (Index j = 0; j < width; ++j)
      for (Index i = 0; i < height; ++i, ++p) {
        const Index coord[3] = {i, j, k};
        for (Index a = 0; a < dim; ++a) {
          if (coord[a] + 1 < ex[a]) {
            const double v = q[dim * p + a];
            out[p + st[a]] += v;
            out[p] -= v;
          }
        }
      }
}

DiffOperator build_diff_operator(Index height, Index width, Index depth) {
  if (height == 0 || width == 0 || depth == 0)
    throw std::invalid_argument("build_diff_operator: grid extents must be >= 1");
  DiffOperator op;
  op.height = height;
  op.width = width;
  op.depth = depth;
  op.dim = depth > 1 ? 3 : 2;

  const auto st = strides(op);
  const auto ex = extents(op);
  const Index n = op.pixels();
  std::vector<Triplet> trips;
  trips.reserve(2 * op.dim * n);
  Index p = 0;
  for (Index k = 0; k < depth; ++k)
    for (Index j = 0; j < width; ++j)
      for (Index i = 0; i < height; ++i, ++p) {
        const Index coord[3] = {i, j, k};
        for (Index a = 0; a < op.dim; ++a) {
          if (coord[a] + 1 < ex[a]) {
            trips.push_back({op.dim * p + a, p, -1.0});
            trips.push_back({op.dim * p + a, p + st[a], 1.0});
          }
        }
      }
  op.D = csr_from_triplets(op.dim * n, n, trips);
  // Power iteration approaches ||D||^2 from below; pad it, but never beyond
  // the 4*dim bound that holds for forward differences.
  const double bound = 4.0 * static_cast<double>(op.dim);
  op.norm_sq = std::min(1.1 * power_iteration_norm_sq(op, 20), bound);
  if (op.norm_sq <= 0.0) op.norm_sq = bound;
  return op;
}

double tv_seminorm(const DiffOperator& op, std::span<const double> x) {
  Vector g(op.dim * op.pixels());
  op.apply(x, g);
  double s = 0.0;
  for (Index p = 0; p < op.pixels(); ++p) {
    double q = 0.0;
    for (Index a = 0; a < op.dim; ++a) q += g[op.dim * p + a] * g[op.dim * p + a];
    s += std::sqrt(q);
  }
  return s;
}

double huber_tv(const DiffOperator& op, std::span<const double> x, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("huber_tv: tau must be positive");
  Vector g(op.dim * op.pixels());
  op.apply(x, g);
  double s = 0.0;
  for (Index p = 0; p < op.pixels(); ++p) {
    double q = 0.0;
    for (Index a = 0; a < op.dim; ++a) q += g[op.dim * p + a] * g[op.dim * p + a];
    const double u = std::sqrt(q);
    s += u <= tau ? u * u / (2.0 * tau) : u - 0.5 * tau;
  }
  return s;
}

void tv_subgradient_into(const DiffOperator& op, std::span<const double> x, double tau,
                         WeightMode mode, std::span<double> out, std::span<double> scratch) {
  if (!(tau > 0.0)) throw std::invalid_argument("tv_subgradient: tau must be positive");
  op.apply(x, scratch);
  for (Index p = 0; p < op.pixels(); ++p) {
    double q = 0.0;
    for (Index a = 0; a < op.dim; ++a) q += scratch[op.dim * p + a] * scratch[op.dim * p + a];
    const double u = std::sqrt(q);
    const double w = mode == WeightMode::Floor ? std::max(tau, u) : u + tau;
    for (Index a = 0; a < op.dim; ++a) scratch[op.dim * p + a] /= w;
  }
  op.apply_t(scratch, out);
}

Vector tv_subgradient(const DiffOperator& op, std::span<const double> x, double tau, WeightMode mode) {
  Vector out(op.pixels()), scratch(op.dim * op.pixels());
  tv_subgradient_into(op, x, tau, mode, out, scratch);
  return out;
}

double default_tau(std::span<const double> x) {
  if (x.empty()) return 1e-4;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return 1e-4 * std::max(*hi - *lo, 1.0);
}

}  // namespace rpx
