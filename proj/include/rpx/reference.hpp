#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rpx/prox.hpp"
#include "rpx/sparse.hpp"
#include "rpx/tv.hpp"

namespace rpx {

/// Power-iteration estimate of the spectral norm ||A||_2.
double estimate_opnorm(const CsrMatrix& A, Index iters = 100, std::uint64_t seed = 7);

struct PDConfig {
  /// Primal and dual steps; 0 selects 0.99 / L for the stacked operator.
  double sigma_p = 0.0;
  double sigma_d = 0.0;
  Index max_iters = 5000;
  /// Stop when the relative primal-dual residual drops to this level.
  double tol = 1e-7;
  /// Objective recorded every `record_stride` iterations.
  Index record_stride = 10;
  Index power_iters = 200;
  std::uint64_t seed = 7;
};

struct PDResult {
  Vector x;
  std::vector<double> objective;
  std::vector<Index> objective_iters;
  bool converged = false;
  Index iterations = 0;
  double residual = 0.0;
  /// Weight s of the stacked operator [A; s D] and its estimated norm L.
  double scale = 1.0;
  double opnorm = 0.0;
};

/// 1/2 ||A x - b||^2 + lambda ||D x||_{1,2}.
double tv_ls_objective(const CsrMatrix& A, std::span<const double> b, const DiffOperator& D, double lambda,
                       std::span<const double> x);

/// Chambolle-Pock on min 1/2 ||A x - b||^2 + lambda ||D x||_{1,2} s.t. x in C,
/// written with the stacked operator K = [A; s D], s = ||A|| / ||D||, and
/// dual ball radius lambda / s. Throws if explicit steps violate
/// sigma_p sigma_d L^2 <= 1.
PDResult solve_tv_ls(const CsrMatrix& A, std::span<const double> b, const DiffOperator& D, double lambda,
                     const ConstraintSet& C, const PDConfig& cfg = {},
                     std::span<const double> x0 = {});

}  // namespace rpx
