#pragma once

#include <span>
#include <stdexcept>

#include "rpx/sparse.hpp"
#include "rpx/tv.hpp"

namespace rpx {

/// Closed convex set with a cheap Euclidean projection: all of R^n, the
/// nonnegative orthant, or a box lower <= x <= upper.
class ConstraintSet {
 public:
  enum class Kind { AllSpace, Nonneg, Box };

  ConstraintSet() = default;

  static ConstraintSet all_space() { return {}; }
  static ConstraintSet nonneg();
  static ConstraintSet box(Vector lower, Vector upper);
  /// Same scalar bounds in every coordinate; works for any dimension.
  static ConstraintSet uniform_box(double lower, double upper);

  Kind kind() const { return kind_; }
  double lower(Index j) const { return lower_.empty() ? scalar_lower_ : lower_[j]; }
  double upper(Index j) const { return upper_.empty() ? scalar_upper_ : upper_[j]; }
  /// Declared dimension of a vector box; 0 when the bounds are scalar.
  Index dimension() const { return lower_.size(); }

  double clamp(Index j, double v) const {
    switch (kind_) {
      case Kind::AllSpace:
        return v;
      case Kind::Nonneg:
        return v < 0.0 ? 0.0 : v;
      case Kind::Box: {
        const double lo = lower(j), hi = upper(j);
        return v < lo ? lo : (v > hi ? hi : v);
      }
    }
    return v;
  }

  bool contains(std::span<const double> x) const;

  /// Short textual form, e.g. "none", "nonneg", "box:0:1".
  std::string describe() const;

 private:
  Kind kind_ = Kind::AllSpace;
  Vector lower_, upper_;
  double scalar_lower_ = 0.0, scalar_upper_ = 0.0;
};

Vector project(const ConstraintSet& C, std::span<const double> x);
void project_inplace(const ConstraintSet& C, std::span<double> x);

/// Output of a proximal map: the point u and the implicit subgradient
/// (x - u)/t, an element of the subdifferential at u.
struct ProxResult {
  Vector point;
  Vector implicit_subgradient;
  bool converged = true;
  Index iterations = 0;
};

/// Scalar coefficients c of the row updates u = x - c * a. Every row prox
/// and every fused row-action sweep goes through these so both paths do the
/// same arithmetic. All return 0 for a zero row.
namespace rowcoef {
double hyperplane(double residual, double norm_sq);
double quadratic_residual(double residual, double norm_sq, double t);
double dist(double residual, double norm_sq, double t);
double dist_sq(double residual, double norm_sq, double t);
double abs_residual(double residual, double norm_sq, double t);
double huber_residual(double residual, double norm_sq, double mu, double t);
}  // namespace rowcoef

/// u = x - c a together with the implicit subgradient (x - u)/t.
ProxResult apply_row_update(RowView a, double c, double t, std::span<const double> x);

/// Nearest point of {u : a.u = b}. Throws for a zero row.
Vector project_hyperplane(RowView a, double b, std::span<const double> x);

/// argmin_u t/2 (a.u - b)^2 + 1/2 ||u - x||^2.
ProxResult prox_quadratic_residual(RowView a, double b, double t, std::span<const double> x);
/// argmin_u t/2 dist(u, H)^2 + 1/2 ||u - x||^2.
ProxResult prox_dist_sq(RowView a, double b, double t, std::span<const double> x);
/// argmin_u t dist(u, H) + 1/2 ||u - x||^2.
ProxResult prox_dist(RowView a, double b, double t, std::span<const double> x);
/// argmin_u t |a.u - b| + 1/2 ||u - x||^2.
ProxResult prox_abs_residual(RowView a, double b, double t, std::span<const double> x);
/// argmin_u t phi_mu(a.u - b) + 1/2 ||u - x||^2 with the Huber penalty phi_mu.
ProxResult prox_huber_residual(RowView a, double b, double mu, double t, std::span<const double> x);

struct RankDeficientBlock : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A row block A_i together with its Gram matrix A_i A_i^T, precomputed once
/// so repeated (damped) block projections only cost a small solve. Zero rows
/// are dropped from the Gram system; they contribute nothing to A_i^T y.
class BlockSystem {
 public:
  BlockSystem() = default;
  explicit BlockSystem(CsrMatrix block, Index cap = kDefaultBlockCap);

  const CsrMatrix& matrix() const { return block_; }
  bool tridiagonal() const { return tridiagonal_; }
  Index rows() const { return block_.rows(); }

  /// y = (A A^T + shift I)^{-1} (A x - b) over the nonzero rows; zero rows
  /// get y = 0. shift = 0 is the undamped pseudoinverse case and throws
  /// RankDeficientBlock when the Gram matrix is singular.
  Vector solve_residual(std::span<const double> b, double shift, std::span<const double> x) const;

  /// x - A^T (A A^T + shift I)^{-1} (A x - b).
  Vector step(std::span<const double> b, double shift, std::span<const double> x) const;

 private:
  CsrMatrix block_;
  std::vector<Index> active_;
  Eigen::MatrixXd gram_;
  bool tridiagonal_ = true;
  Vector diag_, off_;
  Index cap_ = kDefaultBlockCap;
};

/// (I + t A_i^T A_i)^{-1}(x + t A_i^T b_i), evaluated as
/// x - A_i^T (A_i A_i^T + I/t)^{-1} (A_i x - b_i).
ProxResult prox_block_ls(const CsrMatrix& Ai, std::span<const double> bi, double t,
                         std::span<const double> x);
ProxResult prox_block_ls(const BlockSystem& Ai, std::span<const double> bi, double t,
                         std::span<const double> x);

/// Undamped block projection x - A_i^+ (A_i x - b_i) for a full-row-rank block.
Vector block_pinv_step(const BlockSystem& Ai, std::span<const double> bi, std::span<const double> x);

inline constexpr double kDefaultTvInnerTol = 1e-6;
inline constexpr Index kDefaultTvInnerMaxIter = 500;

/// TV denoising: argmin_u lambda_t ||D u||_{1,2} + 1/2 ||u - x||^2, solved by
/// accelerated projected gradient on the dual (pixelwise ball constraints).
/// Stops when ||p_{k+1} - y_k|| <= inner_tol ||p_{k+1}|| or at the cap, in
/// which case `converged` is false. implicit_subgradient is (x - u)/lambda_t,
/// a subgradient of the unscaled seminorm at u.
ProxResult prox_tv(const DiffOperator& op, double lambda_t, std::span<const double> x,
                   double inner_tol = kDefaultTvInnerTol, Index inner_max_iter = kDefaultTvInnerMaxIter);

}  // namespace rpx
