#include "rpx/ripg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace rpx {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double huber(double r, double mu) {
  const double a = std::abs(r);
  return a < mu ? r * r / (2.0 * mu) : a - 0.5 * mu;
}

double residual(const RowRef& a, double b, std::span<const double> x) { return a.view().dot(x) - b; }

void check_row(const RowRef& a, Index n) {
  if (!a.matrix) throw std::invalid_argument("component row has no matrix");
  if (a.index >= a.matrix->rows()) throw std::invalid_argument("component row index out of range");
  if (a.dimension() != n) throw DimensionError("component row dimension differs from ambient n");
}

// x+ = P_C(x + rho (z - x)).
Vector relax_and_project(std::span<const double> x, std::span<const double> z, double rho,
                         const ConstraintSet& C) {
  Vector out(x.size());
  for (Index j = 0; j < x.size(); ++j) out[j] = C.clamp(j, x[j] + rho * (z[j] - x[j]));
  return out;
}

void check_step_params(double t, double rho) {
  if (!(t > 0.0)) throw std::invalid_argument("ripg step: t must be positive");
  if (!(rho > 0.0 && rho < 2.0)) throw std::invalid_argument("ripg step: rho must lie in (0, 2)");
}

}  // namespace

RowRef make_row(std::span<const double> dense) {
  const SparseVector sv = SparseVector::from_dense(dense);
  std::vector<Index> offsets{0, sv.indices().size()};
  auto M = std::make_shared<const CsrMatrix>(1, dense.size(), std::move(offsets), sv.indices(), sv.values());
  return {std::move(M), 0};
}

static void check_block(const BlockSystem* block, const Vector& b, Index n) {
  if (!block) throw std::invalid_argument("block component has no block");
  if (block->matrix().cols() != n) throw DimensionError("block dimension differs from n");
  if (b.size() != block->rows()) throw DimensionError("block rhs length mismatch");
}

void validate(const ComponentSpec& c, Index n) {
  std::visit(overloaded{
                 [](const gterm::Zero&) {},
                 [n](const gterm::Hyperplane& g) { check_row(g.a, n); },
                 [n](const gterm::QuadraticResidual& g) { check_row(g.a, n); },
                 [n](const gterm::Dist& g) { check_row(g.a, n); },
                 [n](const gterm::DistSq& g) { check_row(g.a, n); },
                 [n](const gterm::AbsResidual& g) { check_row(g.a, n); },
                 [n](const gterm::HuberResidual& g) {
                   check_row(g.a, n);
                   if (!(g.mu >= 0.0)) throw std::invalid_argument("huber component: mu must be >= 0");
                 },
                 [n](const gterm::BlockLs& g) { check_block(g.block.get(), g.b, n); },
                 [n](const gterm::BlockIndicator& g) { check_block(g.block.get(), g.b, n); },
                 [n](const gterm::ScaledTv& g) {
                   if (!g.op || g.op->pixels() != n) throw DimensionError("TV component dimension mismatch");
                   if (!(g.weight >= 0.0)) throw std::invalid_argument("TV weight must be >= 0");
                 },
             },
             c.g);
  std::visit(overloaded{
                 [](const hterm::Zero&) {},
                 [n](const hterm::NormalizedResidual& h) { check_row(h.a, n); },
                 [n](const hterm::ScaledTvSubgrad& h) {
                   if (!h.op || h.op->pixels() != n) throw DimensionError("TV component dimension mismatch");
                   if (!(h.weight >= 0.0)) throw std::invalid_argument("TV weight must be >= 0");
                   if (!(h.tau > 0.0)) throw std::invalid_argument("TV tau must be > 0");
                 },
             },
             c.h);
}

ProxResult prox_g(const GTerm& g, double t, std::span<const double> x) {
  return std::visit(
      overloaded{
          [&](const gterm::Zero&) {
            return ProxResult{Vector(x.begin(), x.end()), Vector(x.size(), 0.0), true, 0};
          },
          [&](const gterm::Hyperplane& g) {
            const RowView a = g.a.view();
            return apply_row_update(a, rowcoef::hyperplane(a.dot(x) - g.b, a.squared_norm()), t, x);
          },
          [&](const gterm::QuadraticResidual& g) { return prox_quadratic_residual(g.a.view(), g.b, t, x); },
          [&](const gterm::Dist& g) { return prox_dist(g.a.view(), g.b, t, x); },
          [&](const gterm::DistSq& g) { return prox_dist_sq(g.a.view(), g.b, t, x); },
          [&](const gterm::AbsResidual& g) { return prox_abs_residual(g.a.view(), g.b, t, x); },
          [&](const gterm::HuberResidual& g) { return prox_huber_residual(g.a.view(), g.b, g.mu, t, x); },
          [&](const gterm::BlockLs& g) { return prox_block_ls(*g.block, g.b, t, x); },
          [&](const gterm::BlockIndicator& g) {
            ProxResult r{block_pinv_step(*g.block, g.b, x), Vector(x.size()), true, 0};
            for (Index j = 0; j < x.size(); ++j) r.implicit_subgradient[j] = (x[j] - r.point[j]) / t;
            return r;
          },
          [&](const gterm::ScaledTv& g) {
            ProxResult r = prox_tv(*g.op, t * g.weight, x, g.inner_tol, g.inner_max_iter);
            for (Index j = 0; j < x.size(); ++j) r.implicit_subgradient[j] = (x[j] - r.point[j]) / t;
            return r;
          },
      },
      g);
}

Vector subgrad_h(const HTerm& h, std::span<const double> x) {
  return std::visit(overloaded{
                        [&](const hterm::Zero&) { return Vector(x.size(), 0.0); },
                        [&](const hterm::NormalizedResidual& h) {
                          const RowView a = h.a.view();
                          const double s = rowcoef::hyperplane(a.dot(x) - h.b, a.squared_norm());
                          Vector gvec(x.size(), 0.0);
                          for (Index k = 0; k < a.size(); ++k) gvec[a.indices[k]] = s * a.values[k];
                          return gvec;
                        },
                        [&](const hterm::ScaledTvSubgrad& h) {
                          Vector gvec = tv_subgradient(*h.op, x, h.tau, h.mode);
                          for (double& v : gvec) v *= h.weight;
                          return gvec;
                        },
                    },
                    h);
}

static double block_half_sq_residual(const BlockSystem& block, std::span<const double> b, std::span<const double> x) {
  const CsrMatrix& A = block.matrix();
  double s = 0.0;
  for (Index i = 0; i < A.rows(); ++i) {
    const double r = A.row(i).dot(x) - b[i];
    s += r * r;
  }
  return 0.5 * s;
}

double value_g(const GTerm& g, std::span<const double> x) {
  return std::visit(
      overloaded{
          [](const gterm::Zero&) { return 0.0; },
          [&](const gterm::Hyperplane& g) {
            const RowView a = g.a.view();
            const double r = a.dot(x) - g.b;
            const double scale = std::sqrt(a.squared_norm()) * norm2(x) + std::abs(g.b);
            return std::abs(r) <= 1e-9 * std::max(scale, 1e-300) ? 0.0 : std::numeric_limits<double>::infinity();
          },
          [&](const gterm::QuadraticResidual& g) {
            const double r = residual(g.a, g.b, x);
            return 0.5 * r * r;
          },
          [&](const gterm::Dist& g) {
            const double n2 = g.a.view().squared_norm();
            return n2 > 0.0 ? std::abs(residual(g.a, g.b, x)) / std::sqrt(n2) : 0.0;
          },
          [&](const gterm::DistSq& g) {
            const double n2 = g.a.view().squared_norm();
            const double r = residual(g.a, g.b, x);
            return n2 > 0.0 ? 0.5 * r * r / n2 : 0.0;
          },
          [&](const gterm::AbsResidual& g) { return std::abs(residual(g.a, g.b, x)); },
          [&](const gterm::HuberResidual& g) { return huber(residual(g.a, g.b, x), g.mu); },
          [&](const gterm::BlockLs& g) { return block_half_sq_residual(*g.block, g.b, x); },
          [&](const gterm::BlockIndicator& g) {
            const double r = std::sqrt(2.0 * block_half_sq_residual(*g.block, g.b, x));
            const double scale = g.block->matrix().rows() > 0 ? norm2(x) + norm2(g.b) : 0.0;
            return r <= 1e-9 * std::max(scale, 1e-300) ? 0.0 : std::numeric_limits<double>::infinity();
          },
          [&](const gterm::ScaledTv& g) { return g.weight * tv_seminorm(*g.op, x); },
      },
      g);
}

double value_h(const HTerm& h, std::span<const double> x) {
  return std::visit(overloaded{
                        [](const hterm::Zero&) { return 0.0; },
                        [&](const hterm::NormalizedResidual& h) {
                          const double n2 = h.a.view().squared_norm();
                          const double r = residual(h.a, h.b, x);
                          return n2 > 0.0 ? 0.5 * r * r / n2 : 0.0;
                        },
                        [&](const hterm::ScaledTvSubgrad& h) {
                          return h.weight * (h.mode == WeightMode::Floor ? huber_tv(*h.op, x, h.tau)
                                                                         : tv_seminorm(*h.op, x));
                        },
                    },
                    h);
}

double objective(std::span<const ComponentSpec> comps, std::span<const double> x) {
  double s = 0.0;
  for (const auto& c : comps) s += value_g(c.g, x) + value_h(c.h, x);
  return s;
}

double trace_objective(std::span<const ComponentSpec> comps, std::span<const double> x) {
  double s = 0.0;
  for (const auto& c : comps) {
    if (const auto* hp = std::get_if<gterm::Hyperplane>(&c.g)) {
      const double n2 = hp->a.view().squared_norm();
      const double r = residual(hp->a, hp->b, x);
      s += n2 > 0.0 ? 0.5 * r * r / n2 : 0.0;
    } else if (const auto* bi = std::get_if<gterm::BlockIndicator>(&c.g)) {
      const double d = distance(x, block_pinv_step(*bi->block, bi->b, x));
      s += 0.5 * d * d;
    } else {
      s += value_g(c.g, x);
    }
    s += value_h(c.h, x);
  }
  return s;
}

StepResult ripg1_step(std::span<const double> x, const ComponentSpec& comp, double t, double rho,
                      const ConstraintSet& C) {
  check_step_params(t, rho);
  StepResult r;
  r.w = prox_g(comp.g, t, x).point;
  if (std::holds_alternative<hterm::Zero>(comp.h)) {
    r.z = r.w;
  } else {
    const Vector gh = subgrad_h(comp.h, r.w);
    r.z.resize(x.size());
    for (Index j = 0; j < x.size(); ++j) r.z[j] = r.w[j] - t * gh[j];
  }
  r.x_next = relax_and_project(x, r.z, rho, C);
  return r;
}

StepResult ripg2_step(std::span<const double> x, const ComponentSpec& comp, double t, double rho,
                      const ConstraintSet& C) {
  check_step_params(t, rho);
  StepResult r;
  if (std::holds_alternative<hterm::Zero>(comp.h)) {
    r.w.assign(x.begin(), x.end());
  } else {
    const Vector gh = subgrad_h(comp.h, x);
    r.w.resize(x.size());
    for (Index j = 0; j < x.size(); ++j) r.w[j] = x[j] - t * gh[j];
  }
  r.z = prox_g(comp.g, t, r.w).point;
  r.x_next = relax_and_project(x, r.z, rho, C);
  return r;
}

StepResult ripg_step(Variant v, std::span<const double> x, const ComponentSpec& comp, double t, double rho,
                     const ConstraintSet& C) {
  return v == Variant::RIPG1 ? ripg1_step(x, comp, t, rho, C) : ripg2_step(x, comp, t, rho, C);
}

double step_size(const Schedule& s, Index k, Index m) {
  if (s.kind == Schedule::Kind::Constant) return s.t0;
  if (m == 0) throw std::invalid_argument("step_size: m must be >= 1");
  const Index cycle = k / m + 1;  // ceil((k+1)/m)
  return s.t0 / static_cast<double>(cycle);
}

IndexControl::IndexControl(Control control, Index m) : control_(control), m_(m), rng_(control.seed) {
  if (m_ == 0) throw std::invalid_argument("IndexControl: m must be >= 1");
}

Index IndexControl::next(Index k) {
  switch (control_.kind) {
    case Control::Kind::Cyclic:
      return k % m_;
    case Control::Kind::Random: {
      std::uniform_int_distribution<Index> dist(0, m_ - 1);
      return dist(rng_);
    }
    case Control::Kind::Shuffled: {
      if (k % m_ == 0 || perm_.empty()) {
        perm_.resize(m_);
        std::iota(perm_.begin(), perm_.end(), Index{0});
        std::shuffle(perm_.begin(), perm_.end(), rng_);
      }
      return perm_[k % m_];
    }
  }
  return k % m_;
}

void validate(const SolveConfig& cfg) {
  if (!(cfg.rho > 0.0 && cfg.rho < 2.0)) throw std::invalid_argument("SolveConfig: rho must lie in (0, 2)");
  if (!(cfg.schedule.t0 > 0.0)) throw std::invalid_argument("SolveConfig: t0 must be positive");
}

IterationTrace run(std::span<const ComponentSpec> comps, std::span<const double> x0, const SolveConfig& cfg,
                   std::optional<std::span<const double>> reference) {
  validate(cfg);
  const Index m = comps.size();
  const Index n = x0.size();
  if (m == 0) throw std::invalid_argument("run: need at least one component");
  if (!all_finite(x0)) throw std::invalid_argument("run: x0 must be finite");
  for (const auto& c : comps) validate(c, n);
  if (reference && reference->size() != n) throw DimensionError("run: reference dimension mismatch");

  const double ref_norm = reference ? norm2(*reference) : 0.0;
  IterationTrace trace;
  Vector x(x0.begin(), x0.end());
  auto record = [&](Index cycle, double t) {
    if (reference) trace.relative_error.push_back(distance(x, *reference) / (ref_norm > 0.0 ? ref_norm : 1.0));
    trace.objective.push_back(trace_objective(comps, x));
    trace.step_sizes.push_back(t);
    if (cfg.snapshot_stride > 0 && cycle % cfg.snapshot_stride == 0) trace.snapshots.emplace_back(cycle, x);
  };
  record(0, 0.0);

  IndexControl control(cfg.control, m);
  for (Index cycle = 1; cycle <= cfg.cycles; ++cycle) {
    double t = 0.0;
    for (Index s = 0; s < m; ++s) {
      const Index k = (cycle - 1) * m + s;
      const Index i = control.next(k);
      t = step_size(cfg.schedule, k, m);
      StepResult r = ripg_step(cfg.variant, x, comps[i], t, cfg.rho, cfg.constraint);
      // Implicit prox subgradient and explicit h subgradient of this step.
      const auto& [g_from, g_to] = cfg.variant == Variant::RIPG1 ? std::pair{&x, &r.w} : std::pair{&r.w, &r.z};
      const auto& [h_from, h_to] = cfg.variant == Variant::RIPG1 ? std::pair{&r.w, &r.z} : std::pair{&x, &r.w};
      trace.max_prox_subgrad_norm = std::max(trace.max_prox_subgrad_norm, distance(*g_from, *g_to) / t);
      trace.max_h_subgrad_norm = std::max(trace.max_h_subgrad_norm, distance(*h_from, *h_to) / t);
      if (!all_finite(r.x_next)) {
        trace.final_x = std::move(x);
        throw NonFiniteIterate("non-finite iterate at step " + std::to_string(k) + " (cycle " +
                                   std::to_string(cycle) + ", component " + std::to_string(i) + ")",
                               k, std::move(trace));
      }
      x = std::move(r.x_next);
    }
    record(cycle, t);
  }
  trace.final_x = std::move(x);
  return trace;
}

CycleRecord run_cycle(std::span<const ComponentSpec> comps, std::span<const double> x_start, double t, double rho,
                      const ConstraintSet& C, Variant variant) {
  CycleRecord rec;
  rec.x.emplace_back(x_start.begin(), x_start.end());
  for (const auto& comp : comps) {
    StepResult r = ripg_step(variant, rec.x.back(), comp, t, rho, C);
    rec.w.push_back(std::move(r.w));
    rec.z.push_back(std::move(r.z));
    rec.x.push_back(std::move(r.x_next));
  }
  return rec;
}

}  // namespace rpx
