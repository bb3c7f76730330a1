#include "rpx/reference.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rpx {
namespace {

// Largest eigenvalue of M^T M by power iteration, where `apply` maps
// v -> M^T M v.
template <class Apply>
double power_norm_sq(Index n, Index iters, std::uint64_t seed, Apply apply) {
  if (n == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n), w(n);
  for (double& e : v) e = gauss(rng);
  double lambda = 0.0;
  for (Index it = 0; it < iters; ++it) {
    const double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    for (double& e : v) e /= nv;
    apply(v, w);
    lambda = dot(v, w);
    v.swap(w);
  }
  return lambda;
}

}  // namespace

double estimate_opnorm(const CsrMatrix& A, Index iters, std::uint64_t seed) {
  if (iters == 0) throw std::invalid_argument("estimate_opnorm: iters must be >= 1");
  Vector Av(A.rows());
  const double l = power_norm_sq(A.cols(), iters, seed, [&](std::span<const double> v, std::span<double> out) {
    spmv_into(A, v, Av);
    spmv_t_into(A, Av, out);
  });
  return std::sqrt(std::max(l, 0.0));
}

double tv_ls_objective(const CsrMatrix& A, std::span<const double> b, const DiffOperator& D, double lambda,
                       std::span<const double> x) {
  const Vector Ax = spmv(A, x);
  double s = 0.0;
  for (Index i = 0; i < Ax.size(); ++i) s += (Ax[i] - b[i]) * (Ax[i] - b[i]);
  return 0.5 * s + (lambda > 0.0 ? lambda * tv_seminorm(D, x) : 0.0);
}

PDResult solve_tv_ls(const CsrMatrix& A, std::span<const double> b, const DiffOperator& D, double lambda,
                     const ConstraintSet& C, const PDConfig& cfg, std::span<const double> x0) {
  const Index n = A.cols(), mrows = A.rows(), d = D.dim;
  if (b.size() != mrows || D.pixels() != n) throw DimensionError("solve_tv_ls: dimension mismatch");
  if (!x0.empty() && x0.size() != n) throw DimensionError("solve_tv_ls: x0 dimension mismatch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("solve_tv_ls: lambda must be nonnegative");
  if (cfg.sigma_p < 0.0 || cfg.sigma_d < 0.0) throw std::invalid_argument("solve_tv_ls: steps must be positive");

  PDResult res;
  const double normA = estimate_opnorm(A, cfg.power_iters, cfg.seed);
  const double normD = std::sqrt(D.norm_sq);
  res.scale = normA > 0.0 && normD > 0.0 ? normA / normD : 1.0;
  const double s = res.scale;

  Vector Av(mrows), Dv(d * n), tmp(n);
  const double L2 = power_norm_sq(n, cfg.power_iters, cfg.seed, [&](std::span<const double> v, std::span<double> out) {
    spmv_into(A, v, Av);
    spmv_t_into(A, Av, out);
    D.apply(v, Dv);
    D.apply_t(Dv, tmp);
    for (Index j = 0; j < n; ++j) out[j] += s * s * tmp[j];
  });
  res.opnorm = std::sqrt(std::max(L2, 0.0));
  const double L = res.opnorm > 0.0 ? res.opnorm : 1.0;
  const double tau = cfg.sigma_p > 0.0 ? cfg.sigma_p : 0.99 / L;
  const double sigma = cfg.sigma_d > 0.0 ? cfg.sigma_d : 0.99 / L;
  if (tau * sigma * L * L > 1.0) throw std::invalid_argument("solve_tv_ls: steps violate sigma_p sigma_d L^2 <= 1");

  const double radius = lambda / s;
  Vector x = x0.empty() ? Vector(n, 0.0) : Vector(x0.begin(), x0.end());
  project_inplace(C, x);
  Vector xbar = x, x_prev(n);
  Vector y1(mrows, 0.0), y2(d * n, 0.0), y1_prev(mrows), y2_prev(d * n);
  Vector Kx1(mrows), Kx2(d * n), KTy(n), KTy_prev(n, 0.0), dx1(mrows), dx2(d * n);

  auto adjoint = [&](std::span<const double> a, std::span<const double> c, std::span<double> out) {
    spmv_t_into(A, a, out);
    D.apply_t(c, tmp);
    for (Index j = 0; j < n; ++j) out[j] += s * tmp[j];
  };
  auto record = [&](Index it) {
    res.objective.push_back(tv_ls_objective(A, b, D, lambda, x));
    res.objective_iters.push_back(it);
  };
  record(0);

  const double bnorm = norm2(b);
  Index it = 0;
  while (it < cfg.max_iters) {
    ++it;
    // Dual step: prox of the conjugate of 1/2||. - b||^2 and the ball projection.
    y1_prev = y1;
    y2_prev = y2;
    spmv_into(A, xbar, Kx1);
    for (Index i = 0; i < mrows; ++i) y1[i] = (y1[i] + sigma * (Kx1[i] - b[i])) / (1.0 + sigma);
    D.apply(xbar, Kx2);
    for (Index q = 0; q < n; ++q) {
      double nrm = 0.0;
      for (Index a = 0; a < d; ++a) {
        double& v = y2[d * q + a];
        v += sigma * s * Kx2[d * q + a];
        nrm += v * v;
      }
      nrm = std::sqrt(nrm);
      if (nrm > radius) {
        const double f = nrm > 0.0 ? radius / nrm : 0.0;
        for (Index a = 0; a < d; ++a) y2[d * q + a] *= f;
      }
    }
    // Primal step.
    x_prev = x;
    KTy_prev = KTy;
    adjoint(y1, y2, KTy);
    for (Index j = 0; j < n; ++j) x[j] = C.clamp(j, x[j] - tau * KTy[j]);
    for (Index j = 0; j < n; ++j) xbar[j] = 2.0 * x[j] - x_prev[j];

    // Residuals of the optimality system.
    double p2 = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double v = (x_prev[j] - x[j]) / tau - (KTy_prev[j] - KTy[j]);
      p2 += v * v;
    }
    for (Index j = 0; j < n; ++j) tmp[j] = x_prev[j] - x[j];
    spmv_into(A, tmp, dx1);
    double d2 = 0.0;
    for (Index i = 0; i < mrows; ++i) {
      const double v = (y1_prev[i] - y1[i]) / sigma - dx1[i];
      d2 += v * v;
    }
    D.apply(tmp, dx2);
    for (Index k = 0; k < d * n; ++k) {
      const double v = (y2_prev[k] - y2[k]) / sigma - s * dx2[k];
      d2 += v * v;
    }
    res.residual = (std::sqrt(p2) + std::sqrt(d2)) / std::max(1.0, norm2(KTy) + bnorm);
    if (cfg.record_stride > 0 && it % cfg.record_stride == 0) record(it);
    if (!all_finite(x)) throw std::runtime_error("solve_tv_ls: non-finite iterate");
    if (res.residual <= cfg.tol) {
      res.converged = true;
      break;
    }
  }
  if (res.objective_iters.back() != it) record(it);
  res.iterations = it;
  res.x = std::move(x);
  return res;
}

}  // namespace rpx
