#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "rpx/prox.hpp"
#include "rpx/sparse.hpp"
#include "rpx/tv.hpp"

namespace rpx {

/// One row a_i^T of a shared matrix.
struct RowRef {
  std::shared_ptr<const CsrMatrix> matrix;
  Index index = 0;

  RowView view() const { return matrix->row(index); }
  Index dimension() const { return matrix->cols(); }
};

/// Wraps a single dense row as a RowRef (1 x n matrix).
RowRef make_row(std::span<const double> dense);

// Terms handled by a proximal step.
namespace gterm {
struct Zero {};
/// Indicator of the hyperplane {x : a.x = b}.
struct Hyperplane { RowRef a; double b = 0.0; };
/// 1/2 (a.x - b)^2
struct QuadraticResidual { RowRef a; double b = 0.0; };
/// dist(x, H)
struct Dist { RowRef a; double b = 0.0; };
/// 1/2 dist(x, H)^2
struct DistSq { RowRef a; double b = 0.0; };
/// |a.x - b|
struct AbsResidual { RowRef a; double b = 0.0; };
/// phi_mu(a.x - b)
struct HuberResidual { RowRef a; double b = 0.0; double mu = 0.0; };
/// 1/2 ||A_i x - b_i||^2
struct BlockLs { std::shared_ptr<const BlockSystem> block; Vector b; };
/// Indicator of {x : A_i x = b_i}; prox is the pseudoinverse projection.
struct BlockIndicator { std::shared_ptr<const BlockSystem> block; Vector b; };
/// weight * ||D x||_{1,2}, prox by the inner TV solver.
struct ScaledTv {
  std::shared_ptr<const DiffOperator> op;
  double weight = 0.0;
  double inner_tol = kDefaultTvInnerTol;
  Index inner_max_iter = kDefaultTvInnerMaxIter;
};
}  // namespace gterm

// Terms handled by an explicit (sub)gradient step.
namespace hterm {
struct Zero {};
/// 1/2 (a.x - b)^2 / ||a||^2
struct NormalizedResidual { RowRef a; double b = 0.0; };
/// weight * TV, stepped along the smoothed subgradient.
struct ScaledTvSubgrad {
  std::shared_ptr<const DiffOperator> op;
  double weight = 0.0;
  double tau = 1e-4;
  WeightMode mode = WeightMode::Floor;
};
}  // namespace hterm

using GTerm = std::variant<gterm::Zero, gterm::Hyperplane, gterm::QuadraticResidual, gterm::Dist,
                           gterm::DistSq, gterm::AbsResidual, gterm::HuberResidual, gterm::BlockLs,
                           gterm::BlockIndicator, gterm::ScaledTv>;
using HTerm = std::variant<hterm::Zero, hterm::NormalizedResidual, hterm::ScaledTvSubgrad>;

/// f_i = g_i + h_i, one summand of the objective.
struct ComponentSpec {
  GTerm g = gterm::Zero{};
  HTerm h = hterm::Zero{};
};

/// Throws if a component's dimensions, weights or tau are invalid for ambient size n.
void validate(const ComponentSpec& c, Index n);

/// prox_{t g}(x).
ProxResult prox_g(const GTerm& g, double t, std::span<const double> x);
/// A subgradient of h at x.
Vector subgrad_h(const HTerm& h, std::span<const double> x);

/// Exact function values. The hyperplane indicator evaluates to 0 on the
/// hyperplane (to 1e-9 relative) and +inf elsewhere.
double value_g(const GTerm& g, std::span<const double> x);
double value_h(const HTerm& h, std::span<const double> x);
/// Objective used in traces: like value_g + value_h, except the hyperplane and
/// block indicators are replaced by the feasibility surrogate 1/2 dist(x, H)^2.
double trace_objective(std::span<const ComponentSpec> comps, std::span<const double> x);
/// sum of value_g + value_h.
double objective(std::span<const ComponentSpec> comps, std::span<const double> x);

enum class Variant { RIPG1, RIPG2 };

struct StepResult {
  Vector x_next;
  Vector w;
  Vector z;
};

/// w = prox_{t g}(x), z = w - t grad h(w), x+ = P_C(x + rho (z - x)).
StepResult ripg1_step(std::span<const double> x, const ComponentSpec& comp, double t, double rho,
                      const ConstraintSet& C);
/// w = x - t grad h(x), z = prox_{t g}(w), x+ = P_C(x + rho (z - x)).
StepResult ripg2_step(std::span<const double> x, const ComponentSpec& comp, double t, double rho,
                      const ConstraintSet& C);
StepResult ripg_step(Variant v, std::span<const double> x, const ComponentSpec& comp, double t,
                     double rho, const ConstraintSet& C);

struct Schedule {
  enum class Kind { Constant, Diminishing };
  Kind kind = Kind::Constant;
  double t0 = 1.0;

  static Schedule constant(double t) { return {Kind::Constant, t}; }
  static Schedule diminishing(double t0) { return {Kind::Diminishing, t0}; }
};

/// Constant: t0. Diminishing: t0 / ceil((k+1)/m), fixed within each cycle
/// of m steps (k is 0-based).
double step_size(const Schedule& s, Index k, Index m);

struct Control {
  enum class Kind { Cyclic, Random, Shuffled };
  Kind kind = Kind::Cyclic;
  std::uint64_t seed = 0;
};

/// Stateful index selection. Must be queried with k = 0, 1, 2, ... in order.
class IndexControl {
 public:
  IndexControl(Control control, Index m);
  Index next(Index k);

 private:
  Control control_;
  Index m_;
  std::mt19937_64 rng_;
  std::vector<Index> perm_;
};

struct SolveConfig {
  double rho = 1.0;
  Schedule schedule;
  Control control;
  ConstraintSet constraint;
  Index cycles = 1;
  Variant variant = Variant::RIPG1;
  /// Keep every `snapshot_stride`-th cycle iterate; 0 disables snapshots.
  Index snapshot_stride = 0;
};

void validate(const SolveConfig& cfg);

/// Histories hold one entry per completed cycle, preceded by the entry for x0
/// (cycle 0), so a run of c cycles yields c + 1 entries.
struct IterationTrace {
  std::vector<double> relative_error;
  std::vector<double> objective;
  /// Step size used during the cycle that produced each entry (0 for x0).
  std::vector<double> step_sizes;
  std::vector<std::pair<Index, Vector>> snapshots;
  Vector final_x;
  double max_prox_subgrad_norm = 0.0;
  double max_h_subgrad_norm = 0.0;
};

/// Thrown on divergence. `partial` holds the trace of the completed cycles
/// and the last finite iterate.
struct NonFiniteIterate : std::runtime_error {
  NonFiniteIterate(const std::string& what, Index step, IterationTrace partial = {})
      : std::runtime_error(what), step(step), partial(std::move(partial)) {}
  Index step;
  IterationTrace partial;
};

/// Runs cfg.cycles * m steps of the configured variant. Relative errors are
/// recorded only when a reference is supplied. Throws NonFiniteIterate on
/// divergence.
IterationTrace run(std::span<const ComponentSpec> comps, std::span<const double> x0,
                   const SolveConfig& cfg, std::optional<std::span<const double>> reference = std::nullopt);

/// Every iterate of one cyclic cycle: x[0..m], and w[j], z[j] of step j.
struct CycleRecord {
  std::vector<Vector> x;
  std::vector<Vector> w;
  std::vector<Vector> z;
};

CycleRecord run_cycle(std::span<const ComponentSpec> comps, std::span<const double> x_start, double t,
                      double rho, const ConstraintSet& C, Variant variant);

}  // namespace rpx
