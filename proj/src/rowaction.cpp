#include "rpx/rowaction.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rpx {
namespace {

void check_rho(double rho) {
  if (!(rho > 0.0 && rho < 2.0)) throw std::invalid_argument("sweep: rho must lie in (0, 2)");
}

void check_t(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("sweep: t must be positive");
}

void check_dims(const CsrMatrix& A, std::span<const double> b, std::span<const double> x) {
  if (b.size() != A.rows() || x.size() != A.cols()) throw DimensionError("sweep: dimension mismatch");
}

// Visits rows in `order` (or 0..m-1) and applies x_j <- P_C(x_j + rho (u_j - x_j))
// on the row support with u = x - coef(r, ||a||^2) a. Coordinates off the
// support are clamped once, after the first row; afterwards only touched
// coordinates can leave C. This is the generic step's arithmetic exactly,
// including for an infeasible start.
template <class Coef>
Vector row_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, const ConstraintSet& C,
                 std::span<const Index> order, Coef coef) {
  check_rho(rho);
  check_dims(A, b, x);
  const Index m = order.empty() ? A.rows() : order.size();
  for (Index s = 0; s < m; ++s) {
    const Index i = order.empty() ? s : order[s];
    const RowView a = A.row(i);
    const double c = coef(a.dot(x) - b[i], a.squared_norm());
    if (c != 0.0)
      for (Index k = 0; k < a.size(); ++k) {
        const Index j = a.indices[k];
        const double u = x[j] - c * a.values[k];
        x[j] = C.clamp(j, x[j] + rho * (u - x[j]));
      }
    if (s == 0) project_inplace(C, x);
  }
  return x;
}

}  // namespace

Vector art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, const ConstraintSet& C,
                 std::span<const Index> order) {
  return row_sweep(A, b, std::move(x), rho, C, order,
                   [](double r, double n2) { return rowcoef::hyperplane(r, n2); });
}

Vector damped_art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, double t,
                        const ConstraintSet& C, std::span<const Index> order) {
  check_t(t);
  return row_sweep(A, b, std::move(x), rho, C, order,
                   [t](double r, double n2) { return rowcoef::quadratic_residual(r, n2, t); });
}

Vector robust_art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, double t, double mu,
                        const ConstraintSet& C, std::span<const Index> order) {
  check_t(t);
  if (!(mu >= 0.0)) throw std::invalid_argument("robust_art_sweep: mu must be nonnegative");
  if (mu == 0.0)
    return row_sweep(A, b, std::move(x), rho, C, order,
                     [t](double r, double n2) { return rowcoef::abs_residual(r, n2, t); });
  return row_sweep(A, b, std::move(x), rho, C, order,
                   [t, mu](double r, double n2) { return rowcoef::huber_residual(r, n2, mu, t); });
}

Vector dist_art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, double t,
                      const ConstraintSet& C, std::span<const Index> order) {
  check_t(t);
  return row_sweep(A, b, std::move(x), rho, C, order,
                   [t](double r, double n2) { return rowcoef::dist(r, n2, t); });
}

Vector dist_sq_art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, double t,
                         const ConstraintSet& C, std::span<const Index> order) {
  check_t(t);
  return row_sweep(A, b, std::move(x), rho, C, order,
                   [t](double r, double n2) { return rowcoef::dist_sq(r, n2, t); });
}

std::vector<BlockSystem> build_blocks(const CsrMatrix& A, const BlockPartition& partition, Index cap) {
  if (partition.total_rows() != A.rows()) throw DimensionError("build_blocks: partition does not cover A");
  std::vector<BlockSystem> blocks;
  blocks.reserve(partition.count());
  for (Index q = 0; q < partition.count(); ++q)
    blocks.emplace_back(A.row_range(partition.begin(q), partition.end(q)), cap);
  return blocks;
}

Vector block_kaczmarz_sweep(const std::vector<BlockSystem>& blocks, const BlockPartition& partition,
                            std::span<const double> b, Vector x, double rho, std::optional<double> t,
                            const ConstraintSet& C, std::span<const Index> order) {
  check_rho(rho);
  if (t) check_t(*t);
  if (blocks.size() != partition.count() || b.size() != partition.total_rows())
    throw DimensionError("block_kaczmarz_sweep: blocks, partition and b disagree");
  const double shift = t ? 1.0 / *t : 0.0;
  const Index p = order.empty() ? blocks.size() : order.size();
  for (Index s = 0; s < p; ++s) {
    const Index q = order.empty() ? s : order[s];
    const auto bq = b.subspan(partition.begin(q), partition.size(q));
    const Vector u = blocks[q].step(bq, shift, x);
    for (Index j = 0; j < x.size(); ++j) x[j] = C.clamp(j, x[j] + rho * (u[j] - x[j]));
  }
  return x;
}

Vector block_kaczmarz_sweep(const CsrMatrix& A, std::span<const double> b, const BlockPartition& partition,
                            Vector x, double rho, std::optional<double> t, const ConstraintSet& C) {
  return block_kaczmarz_sweep(build_blocks(A, partition), partition, b, std::move(x), rho, t, C);
}

Preconditioner build_column_equilibration(const CsrMatrix& A, double p_norm) {
  if (!(p_norm == 1.0 || p_norm == 2.0 || std::isinf(p_norm)))
    throw std::invalid_argument("build_column_equilibration: p must be 1, 2 or inf");
  const Vector norms = column_norms(A, p_norm);
  std::vector<Index> zero;
  for (Index j = 0; j < norms.size(); ++j)
    if (!(norms[j] > 0.0)) zero.push_back(j);
  if (!zero.empty()) {
    std::ostringstream os;
    os << "build_column_equilibration: zero columns:";
    for (Index j : zero) os << ' ' << j;
    throw std::invalid_argument(os.str());
  }
  Preconditioner T;
  T.diag.resize(norms.size());
  for (Index j = 0; j < norms.size(); ++j) T.diag[j] = 1.0 / norms[j];
  return T;
}

Vector preconditioned_ripg1_sweep(const CsrMatrix& A, std::span<const double> b, const Preconditioner& T,
                                  Vector x, double rho, double t, const TvSweepParams& tv,
                                  const ConstraintSet& C, std::span<const Index> order) {
  check_rho(rho);
  check_t(t);
  check_dims(A, b, x);
  const Index n = x.size();
  const bool scaled = !T.diag.empty();
  if (scaled) {
    if (T.diag.size() != n) throw DimensionError("preconditioned sweep: T has the wrong size");
    for (double d : T.diag)
      if (!(d > 0.0)) throw UnsupportedConfiguration("preconditioned sweep: T must be positive diagonal");
  }
  if (!(tv.lambda >= 0.0)) throw std::invalid_argument("preconditioned sweep: lambda must be nonnegative");
  const bool with_tv = tv.lambda > 0.0;
  if (with_tv) {
    if (!tv.op || tv.op->pixels() != n) throw DimensionError("preconditioned sweep: TV operator size mismatch");
    if (!(tv.tau > 0.0)) throw std::invalid_argument("preconditioned sweep: tau must be positive");
  }

  Vector T2(scaled ? n : 0);
  for (Index j = 0; j < T2.size(); ++j) T2[j] = T.diag[j] * T.diag[j];
  const Index m = order.empty() ? A.rows() : order.size();
  const double weight = tv.lambda / static_cast<double>(A.rows());
  Vector w(n), grad(with_tv ? n : 0), scratch(with_tv ? tv.op->dim * n : 0);

  for (Index s = 0; s < m; ++s) {
    const Index i = order.empty() ? s : order[s];
    const RowView a = A.row(i);
    double n2 = 0.0;
    if (scaled) {
      for (Index k = 0; k < a.size(); ++k) {
        const double ta = T.diag[a.indices[k]] * a.values[k];
        n2 += ta * ta;
      }
    } else {
      n2 = a.squared_norm();
    }
    const double c = rowcoef::quadratic_residual(a.dot(x) - b[i], n2, t);
    if (!with_tv) {
      if (c != 0.0)
        for (Index k = 0; k < a.size(); ++k) {
          const Index j = a.indices[k];
          const double u = x[j] - c * (scaled ? T2[j] * a.values[k] : a.values[k]);
          x[j] = C.clamp(j, x[j] + rho * (u - x[j]));
        }
      if (s == 0) project_inplace(C, x);
      continue;
    }
    w = x;
    for (Index k = 0; k < a.size(); ++k) {
      const Index j = a.indices[k];
      w[j] = x[j] - c * (scaled ? T2[j] * a.values[k] : a.values[k]);
    }
    tv_subgradient_into(*tv.op, w, tv.tau, tv.mode, grad, scratch);
    for (Index j = 0; j < n; ++j) {
      const double gj = weight * grad[j];
      const double z = w[j] - t * (scaled ? gj * T2[j] : gj);
      x[j] = C.clamp(j, x[j] + rho * (z - x[j]));
    }
  }
  return x;
}

Vector tv_art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, double t,
                    const TvSweepParams& tv, const ConstraintSet& C, std::span<const Index> order) {
  return preconditioned_ripg1_sweep(A, b, Preconditioner{}, std::move(x), rho, t, tv, C, order);
}

Method parse_method(const std::string& name) {
  if (name == "art") return Method::Art;
  if (name == "damped-art") return Method::DampedArt;
  if (name == "block-kaczmarz") return Method::BlockKaczmarz;
  if (name == "damped-block") return Method::DampedBlock;
  if (name == "l1-art") return Method::L1Art;
  if (name == "huber-art") return Method::HuberArt;
  if (name == "dist-art") return Method::DistArt;
  if (name == "dist-sq-art") return Method::DistSqArt;
  throw std::invalid_argument("unknown row-action method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Art:
      return "art";
    case Method::DampedArt:
      return "damped-art";
    case Method::BlockKaczmarz:
      return "block-kaczmarz";
    case Method::DampedBlock:
      return "damped-block";
    case Method::L1Art:
      return "l1-art";
    case Method::HuberArt:
      return "huber-art";
    case Method::DistArt:
      return "dist-art";
    case Method::DistSqArt:
      return "dist-sq-art";
  }
  return "art";
}

std::vector<ComponentSpec> method_components(const CsrMatrix& A, std::span<const double> b, Method kind,
                                             double mu, const BlockPartition* partition) {
  if (b.size() != A.rows()) throw DimensionError("method_components: b length mismatch");
  std::vector<ComponentSpec> comps;
  if (kind == Method::BlockKaczmarz || kind == Method::DampedBlock) {
    if (!partition) throw std::invalid_argument("method_components: block methods need a partition");
    const auto blocks = build_blocks(A, *partition);
    for (Index q = 0; q < blocks.size(); ++q) {
      const auto bq = b.subspan(partition->begin(q), partition->size(q));
      auto block = std::make_shared<const BlockSystem>(blocks[q]);
      Vector rhs(bq.begin(), bq.end());
      if (kind == Method::BlockKaczmarz)
        comps.push_back({gterm::BlockIndicator{std::move(block), std::move(rhs)}, hterm::Zero{}});
      else
        comps.push_back({gterm::BlockLs{std::move(block), std::move(rhs)}, hterm::Zero{}});
    }
    return comps;
  }
  auto shared = std::make_shared<const CsrMatrix>(A);
  comps.reserve(A.rows());
  for (Index i = 0; i < A.rows(); ++i) {
    const RowRef a{shared, i};
    ComponentSpec c;
    switch (kind) {
      case Method::Art:
        c.g = gterm::Hyperplane{a, b[i]};
        break;
      case Method::DampedArt:
        c.g = gterm::QuadraticResidual{a, b[i]};
        break;
      case Method::L1Art:
        c.g = gterm::AbsResidual{a, b[i]};
        break;
      case Method::HuberArt:
        c.g = gterm::HuberResidual{a, b[i], mu};
        break;
      case Method::DistArt:
        c.g = gterm::Dist{a, b[i]};
        break;
      case Method::DistSqArt:
        c.g = gterm::DistSq{a, b[i]};
        break;
      default:
        break;
    }
    comps.push_back(std::move(c));
  }
  return comps;
}

IterationTrace run_method(const CsrMatrix& A, std::span<const double> b, const MethodSpec& spec,
                          std::span<const double> x0, Index cycles, std::optional<std::span<const double>> reference,
                          const BlockPartition* partition, Index snapshot_stride) {
  check_rho(spec.rho);
  if (!(spec.schedule.t0 > 0.0)) throw std::invalid_argument("run_method: t0 must be positive");
  check_dims(A, b, x0);
  if (!all_finite(x0)) throw std::invalid_argument("run_method: x0 must be finite");
  if (reference && reference->size() != x0.size()) throw DimensionError("run_method: reference dimension mismatch");
  const bool blocky = spec.kind == Method::BlockKaczmarz || spec.kind == Method::DampedBlock;
  if (blocky && !partition) throw std::invalid_argument("run_method: block methods need a partition");

  const auto comps = method_components(A, b, spec.kind, spec.mu, partition);
  std::vector<BlockSystem> blocks;
  if (blocky) blocks = build_blocks(A, *partition);
  const Index m = comps.size();

  const double ref_norm = reference ? norm2(*reference) : 0.0;
  IterationTrace trace;
  Vector x(x0.begin(), x0.end());
  auto record = [&](Index cycle, double t) {
    if (reference) trace.relative_error.push_back(distance(x, *reference) / (ref_norm > 0.0 ? ref_norm : 1.0));
    trace.objective.push_back(trace_objective(comps, x));
    trace.step_sizes.push_back(t);
    if (snapshot_stride > 0 && cycle % snapshot_stride == 0) trace.snapshots.emplace_back(cycle, x);
  };
  record(0, 0.0);

  IndexControl control(spec.control, m);
  std::vector<Index> order;
  for (Index cycle = 1; cycle <= cycles; ++cycle) {
    const Index k0 = (cycle - 1) * m;
    const double t = step_size(spec.schedule, k0, m);
    order.clear();
    if (spec.control.kind != Control::Kind::Cyclic)
      for (Index s = 0; s < m; ++s) order.push_back(control.next(k0 + s));
    const ConstraintSet& C = spec.constraint;
    Vector previous = x;
    switch (spec.kind) {
      case Method::Art:
        x = art_sweep(A, b, std::move(x), spec.rho, C, order);
        break;
      case Method::DampedArt:
        x = damped_art_sweep(A, b, std::move(x), spec.rho, t, C, order);
        break;
      case Method::L1Art:
        x = robust_art_sweep(A, b, std::move(x), spec.rho, t, 0.0, C, order);
        break;
      case Method::HuberArt:
        x = robust_art_sweep(A, b, std::move(x), spec.rho, t, spec.mu, C, order);
        break;
      case Method::DistArt:
        x = dist_art_sweep(A, b, std::move(x), spec.rho, t, C, order);
        break;
      case Method::DistSqArt:
        x = dist_sq_art_sweep(A, b, std::move(x), spec.rho, t, C, order);
        break;
      case Method::BlockKaczmarz:
        x = block_kaczmarz_sweep(blocks, *partition, b, std::move(x), spec.rho, std::nullopt, C, order);
        break;
      case Method::DampedBlock:
        x = block_kaczmarz_sweep(blocks, *partition, b, std::move(x), spec.rho, t, C, order);
        break;
    }
    if (!all_finite(x)) {
      trace.final_x = std::move(previous);
      throw NonFiniteIterate("non-finite iterate in cycle " + std::to_string(cycle), k0 + m - 1, std::move(trace));
    }
    record(cycle, t);
  }
  trace.final_x = std::move(x);
  return trace;
}

}  // namespace rpx
