#pragma once

#include <span>

#include "rpx/sparse.hpp"

namespace rpx {

/// Forward-difference gradient operator with Neumann boundary on a
/// column-major image grid. Pixel p owns rows [dim*p, dim*p + dim) of D:
/// first the difference along the fastest (row) index, then along columns,
/// then (3-D only) along slices.
struct DiffOperator {
  CsrMatrix D;
  Index dim = 2;
  Index height = 0;
  Index width = 0;
  Index depth = 1;
  /// Upper estimate of ||D||^2 used as the Lipschitz constant in the TV prox.
  double norm_sq = 0.0;

  Index pixels() const { return height * width * depth; }

  /// D x via the stencil (does not touch the CSR arrays).
  void apply(std::span<const double> x, std::span<double> out) const;
  /// D^T p via the stencil.
  void apply_t(std::span<const double> p, std::span<double> out) const;
};

/// 2-D operator when depth == 1, 3-D otherwise.
DiffOperator build_diff_operator(Index height, Index width, Index depth = 1);

enum class WeightMode { Floor, Shift };

/// sum over pixels of ||D_i x||_2.
double tv_seminorm(const DiffOperator& op, std::span<const double> x);

/// Huber-smoothed seminorm sum phi_tau(||D_i x||), phi_tau(u) = u^2/(2 tau)
/// for u <= tau and u - tau/2 otherwise.
double huber_tv(const DiffOperator& op, std::span<const double> x, double tau);

/// D^T diag(w_i I)^{-1} D x with w_i = max(tau, ||D_i x||) (Floor, the exact
/// gradient of huber_tv) or w_i = ||D_i x|| + tau (Shift).
Vector tv_subgradient(const DiffOperator& op, std::span<const double> x, double tau,
                      WeightMode mode = WeightMode::Floor);
void tv_subgradient_into(const DiffOperator& op, std::span<const double> x, double tau,
                         WeightMode mode, std::span<double> out, std::span<double> scratch);

/// 1e-4 times the dynamic range of x, with the range floored at 1.
double default_tau(std::span<const double> x);

}  // namespace rpx
