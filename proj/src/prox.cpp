#include "rpx/prox.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rpx {
namespace {

void check_step(double t, const char* who) {
  if (!(t > 0.0)) throw std::invalid_argument(std::string(who) + ": step t must be positive");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

ProxResult apply_row_update(RowView a, double c, double t, std::span<const double> x) {
  ProxResult r;
  r.point.assign(x.begin(), x.end());
  for (Index k = 0; k < a.size(); ++k) r.point[a.indices[k]] = x[a.indices[k]] - c * a.values[k];
  r.implicit_subgradient.assign(x.size(), 0.0);
  for (Index k = 0; k < a.size(); ++k) {
    const Index j = a.indices[k];
    r.implicit_subgradient[j] = (x[j] - r.point[j]) / t;
  }
  return r;
}

ConstraintSet ConstraintSet::nonneg() {
  ConstraintSet c;
  c.kind_ = Kind::Nonneg;
  return c;
}

ConstraintSet ConstraintSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) throw DimensionError("ConstraintSet::box: bound sizes differ");
  for (Index j = 0; j < lower.size(); ++j)
    if (!(lower[j] <= upper[j])) throw std::invalid_argument("ConstraintSet::box: need lower <= upper");
  ConstraintSet c;
  c.kind_ = Kind::Box;
  c.lower_ = std::move(lower);
  c.upper_ = std::move(upper);
  return c;
}

ConstraintSet ConstraintSet::uniform_box(double lower, double upper) {
  if (!(lower <= upper)) throw std::invalid_argument("ConstraintSet::uniform_box: need lower <= upper");
  ConstraintSet c;
  c.kind_ = Kind::Box;
  c.scalar_lower_ = lower;
  c.scalar_upper_ = upper;
  return c;
}

bool ConstraintSet::contains(std::span<const double> x) const {
  for (Index j = 0; j < x.size(); ++j)
    if (clamp(j, x[j]) != x[j]) return false;
  return true;
}

std::string ConstraintSet::describe() const {
  switch (kind_) {
    case Kind::AllSpace:
      return "none";
    case Kind::Nonneg:
      return "nonneg";
    case Kind::Box: {
      if (!lower_.empty()) return "box:vector";
      std::ostringstream os;
      os.precision(17);
      os << "box:" << scalar_lower_ << ":" << scalar_upper_;
      return os.str();
    }
  }
  return "none";
}

void project_inplace(const ConstraintSet& C, std::span<double> x) {
  if (C.dimension() != 0 && C.dimension() != x.size()) throw DimensionError("project: dimension mismatch");
  if (C.kind() == ConstraintSet::Kind::AllSpace) return;
  for (Index j = 0; j < x.size(); ++j) x[j] = C.clamp(j, x[j]);
}

Vector project(const ConstraintSet& C, std::span<const double> x) {
  Vector out(x.begin(), x.end());
  project_inplace(C, out);
  return out;
}

namespace rowcoef {

double hyperplane(double residual, double norm_sq) {
  return norm_sq > 0.0 ? residual / norm_sq : 0.0;
}

double quadratic_residual(double residual, double norm_sq, double t) {
  return norm_sq > 0.0 ? residual / (norm_sq + 1.0 / t) : 0.0;
}

double dist(double residual, double norm_sq, double t) {
  if (!(norm_sq > 0.0)) return 0.0;
  const double norm = std::sqrt(norm_sq);
  return std::abs(residual) < t * norm ? residual / norm_sq : t * sign(residual) / norm;
}

double dist_sq(double residual, double norm_sq, double t) {
  return norm_sq > 0.0 ? (t * residual) / ((1.0 + t) * norm_sq) : 0.0;
}

double abs_residual(double residual, double norm_sq, double t) {
  if (!(norm_sq > 0.0)) return 0.0;
  return std::abs(residual) < t * norm_sq ? residual / norm_sq : t * sign(residual);
}

double huber_residual(double residual, double norm_sq, double mu, double t) {
  if (!(norm_sq > 0.0)) return 0.0;
  return std::abs(residual) < mu + t * norm_sq ? residual / (mu / t + norm_sq) : t * sign(residual);
}

}  // namespace rowcoef

Vector project_hyperplane(RowView a, double b, std::span<const double> x) {
  const double nrm2 = a.squared_norm();
  if (!(nrm2 > 0.0)) throw std::invalid_argument("project_hyperplane: zero row has no hyperplane");
  const double c = rowcoef::hyperplane(a.dot(x) - b, nrm2);
  Vector u(x.begin(), x.end());
  for (Index k = 0; k < a.size(); ++k) u[a.indices[k]] = x[a.indices[k]] - c * a.values[k];
  return u;
}

ProxResult prox_quadratic_residual(RowView a, double b, double t, std::span<const double> x) {
  check_step(t, "prox_quadratic_residual");
  return apply_row_update(a, rowcoef::quadratic_residual(a.dot(x) - b, a.squared_norm(), t), t, x);
}

ProxResult prox_dist_sq(RowView a, double b, double t, std::span<const double> x) {
  check_step(t, "prox_dist_sq");
  return apply_row_update(a, rowcoef::dist_sq(a.dot(x) - b, a.squared_norm(), t), t, x);
}

ProxResult prox_dist(RowView a, double b, double t, std::span<const double> x) {
  check_step(t, "prox_dist");
  return apply_row_update(a, rowcoef::dist(a.dot(x) - b, a.squared_norm(), t), t, x);
}

ProxResult prox_abs_residual(RowView a, double b, double t, std::span<const double> x) {
  check_step(t, "prox_abs_residual");
  return apply_row_update(a, rowcoef::abs_residual(a.dot(x) - b, a.squared_norm(), t), t, x);
}

ProxResult prox_huber_residual(RowView a, double b, double mu, double t, std::span<const double> x) {
  check_step(t, "prox_huber_residual");
  if (!(mu >= 0.0)) throw std::invalid_argument("prox_huber_residual: mu must be nonnegative");
  return apply_row_update(a, rowcoef::huber_residual(a.dot(x) - b, a.squared_norm(), mu, t), t, x);
}

BlockSystem::BlockSystem(CsrMatrix block, Index cap) : block_(std::move(block)), cap_(cap) {
  if (block_.rows() > cap_) throw std::invalid_argument("BlockSystem: block exceeds the row cap");
  for (Index i = 0; i < block_.rows(); ++i)
    if (!block_.row(i).empty()) active_.push_back(i);

  std::vector<Triplet> trips;
  for (Index a = 0; a < active_.size(); ++a) {
    const RowView r = block_.row(active_[a]);
    for (Index k = 0; k < r.size(); ++k) trips.push_back({a, r.indices[k], r.values[k]});
  }
  const CsrMatrix reduced = csr_from_triplets(active_.size(), block_.cols(), trips);
  gram_ = gram(reduced);
  tridiagonal_ = is_tridiagonal(gram_);
  if (tridiagonal_) {
    const auto m = gram_.rows();
    diag_.resize(static_cast<Index>(m));
    off_.resize(m > 0 ? static_cast<Index>(m - 1) : 0);
    for (Eigen::Index i = 0; i < m; ++i) diag_[static_cast<Index>(i)] = gram_(i, i);
    for (Eigen::Index i = 0; i + 1 < m; ++i) off_[static_cast<Index>(i)] = gram_(i + 1, i);
  }
}

Vector BlockSystem::solve_residual(std::span<const double> b, double shift, std::span<const double> x) const {
  if (b.size() != block_.rows() || x.size() != block_.cols())
    throw DimensionError("BlockSystem: dimension mismatch");
  const auto m = static_cast<Eigen::Index>(active_.size());
  Eigen::VectorXd res(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const Index i = active_[static_cast<Index>(a)];
    res[a] = block_.row(i).dot(x) - b[i];
  }
  Eigen::VectorXd y;
  try {
    if (tridiagonal_) {
      Vector d = diag_;
      for (double& v : d) v += shift;
      y = solve_tridiagonal_spd(d, off_, res);
    } else {
      Eigen::MatrixXd M = gram_;
      M.diagonal().array() += shift;
      y = solve_small_spd(M, res, cap_);
    }
  } catch (const NotPositiveDefinite&) {
    if (shift == 0.0)
      throw RankDeficientBlock("block is rank deficient; use the damped block method (finite t)");
    throw;
  }
  Vector out(block_.rows(), 0.0);
  for (Eigen::Index a = 0; a < m; ++a) out[active_[static_cast<Index>(a)]] = y[a];
  return out;
}

Vector BlockSystem::step(std::span<const double> b, double shift, std::span<const double> x) const {
  const Vector y = solve_residual(b, shift, x);
  Vector u(x.begin(), x.end());
  for (Index i = 0; i < block_.rows(); ++i) {
    const RowView r = block_.row(i);
    for (Index k = 0; k < r.size(); ++k) u[r.indices[k]] -= r.values[k] * y[i];
  }
  return u;
}

ProxResult prox_block_ls(const BlockSystem& Ai, std::span<const double> bi, double t,
                         std::span<const double> x) {
  check_step(t, "prox_block_ls");
  ProxResult r;
  r.point = Ai.step(bi, 1.0 / t, x);
  r.implicit_subgradient.resize(x.size());
  for (Index j = 0; j < x.size(); ++j) r.implicit_subgradient[j] = (x[j] - r.point[j]) / t;
  return r;
}

ProxResult prox_block_ls(const CsrMatrix& Ai, std::span<const double> bi, double t,
                         std::span<const double> x) {
  return prox_block_ls(BlockSystem(Ai), bi, t, x);
}

Vector block_pinv_step(const BlockSystem& Ai, std::span<const double> bi, std::span<const double> x) {
  return Ai.step(bi, 0.0, x);
}

ProxResult prox_tv(const DiffOperator& op, double lambda_t, std::span<const double> x, double inner_tol,
                   Index inner_max_iter) {
  if (!(lambda_t >= 0.0)) throw std::invalid_argument("prox_tv: lambda_t must be nonnegative");
  if (x.size() != op.pixels()) throw DimensionError("prox_tv: dimension mismatch");
  const Index n = op.pixels();
  const Index d = op.dim;
  ProxResult result;
  if (lambda_t == 0.0) {
    result.point.assign(x.begin(), x.end());
    result.implicit_subgradient.assign(n, 0.0);
    return result;
  }

  const double step = 1.0 / op.norm_sq;
  Vector p(d * n, 0.0), p_prev(d * n, 0.0), y(d * n, 0.0), u(n), Du(d * n), DTy(n);
  double theta = 1.0;
  bool converged = false;
  Index it = 0;
  for (; it < inner_max_iter; ++it) {
    // u(y) = x - D^T y, then ascend along D u and project each pixel onto the ball.
    op.apply_t(y, DTy);
    for (Index j = 0; j < n; ++j) u[j] = x[j] - DTy[j];
    op.apply(u, Du);
    p_prev.swap(p);
    for (Index q = 0; q < n; ++q) {
      double s = 0.0;
      for (Index a = 0; a < d; ++a) {
        const double v = y[d * q + a] + step * Du[d * q + a];
        p[d * q + a] = v;
        s += v * v;
      }
      const double nrm = std::sqrt(s);
      if (nrm > lambda_t) {
        const double scale = lambda_t / nrm;
        for (Index a = 0; a < d; ++a) p[d * q + a] *= scale;
      }
    }
    const double change = distance(p, y);
    const double size = norm2(p);
    if (change <= inner_tol * std::max(size, 1e-300)) {
      converged = true;
      ++it;
      break;
    }
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    const double momentum = (theta - 1.0) / theta_next;
    for (Index k = 0; k < d * n; ++k) y[k] = p[k] + momentum * (p[k] - p_prev[k]);
    theta = theta_next;
  }

  op.apply_t(p, DTy);
  result.point.resize(n);
  result.implicit_subgradient.resize(n);
  for (Index j = 0; j < n; ++j) {
    result.point[j] = x[j] - DTy[j];
    result.implicit_subgradient[j] = DTy[j] / lambda_t;
  }
  result.converged = converged;
  result.iterations = it;
  return result;
}

}  // namespace rpx
