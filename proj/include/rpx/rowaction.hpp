#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpx/prox.hpp"
#include "rpx/ripg.hpp"
#include "rpx/sparse.hpp"
#include "rpx/tv.hpp"

namespace rpx {

// Fused row-action sweeps. Each sweep visits the rows (or blocks) in `order`,
// or cyclically when `order` is empty, and applies
//   x <- P_C(x + rho (u - x))
// where u is the row update of the method. The arithmetic is the same as the
// generic R-IPG driver, so results agree with ripg::run to rounding.

Vector art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, const ConstraintSet& C,
                 std::span<const Index> order = {});

Vector damped_art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, double t,
                        const ConstraintSet& C, std::span<const Index> order = {});

/// mu = 0 gives the l1-residual method, mu > 0 the Huber-residual method.
Vector robust_art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, double t, double mu,
                        const ConstraintSet& C, std::span<const Index> order = {});

Vector dist_art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, double t,
                      const ConstraintSet& C, std::span<const Index> order = {});

Vector dist_sq_art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, double t,
                         const ConstraintSet& C, std::span<const Index> order = {});

/// Gram systems of every block of a partition.
std::vector<BlockSystem> build_blocks(const CsrMatrix& A, const BlockPartition& partition,
                                      Index cap = kDefaultBlockCap);

/// Undamped (t empty) block Kaczmarz or its damped form with step t.
Vector block_kaczmarz_sweep(const std::vector<BlockSystem>& blocks, const BlockPartition& partition,
                            std::span<const double> b, Vector x, double rho, std::optional<double> t,
                            const ConstraintSet& C, std::span<const Index> order = {});
Vector block_kaczmarz_sweep(const CsrMatrix& A, std::span<const double> b, const BlockPartition& partition,
                            Vector x, double rho, std::optional<double> t, const ConstraintSet& C);

/// Positive diagonal scaling T. An empty diagonal stands for the identity.
struct Preconditioner {
  Vector diag;
};

struct UnsupportedConfiguration : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// T with diag[j] = 1 / ||A e_j||_p, p in {1, 2, inf}. Throws listing the
/// zero columns when there are any.
Preconditioner build_column_equilibration(const CsrMatrix& A, double p_norm = 2.0);

struct TvSweepParams {
  const DiffOperator* op = nullptr;
  double lambda = 0.0;
  double tau = 1e-4;
  WeightMode mode = WeightMode::Floor;
};

/// One cycle of the m-component TV splitting (g_i = 1/2 (a_i.x - b_i)^2,
/// h_i = lambda/m psi_tau) with a diagonal preconditioner, in the original
/// variables:
///   w = x - T^2 a_i r_i / (||T a_i||^2 + 1/t)
///   z = w - t (lambda/m) T^2 grad psi_tau(w)
///   x <- P_C(x + rho (z - x))
Vector preconditioned_ripg1_sweep(const CsrMatrix& A, std::span<const double> b, const Preconditioner& T,
                                  Vector x, double rho, double t, const TvSweepParams& tv,
                                  const ConstraintSet& C, std::span<const Index> order = {});

/// The same cycle without scaling (T = I).
Vector tv_art_sweep(const CsrMatrix& A, std::span<const double> b, Vector x, double rho, double t,
                    const TvSweepParams& tv, const ConstraintSet& C, std::span<const Index> order = {});

enum class Method { Art, DampedArt, BlockKaczmarz, DampedBlock, L1Art, HuberArt, DistArt, DistSqArt };

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct MethodSpec {
  Method kind = Method::Art;
  double rho = 1.0;
  Schedule schedule;
  Control control;
  ConstraintSet constraint;
  double mu = 0.0;
};

/// The equivalent generic component list of a named method (one component
/// per row, or per block for the block methods).
std::vector<ComponentSpec> method_components(const CsrMatrix& A, std::span<const double> b, Method kind,
                                             double mu = 0.0, const BlockPartition* partition = nullptr);

/// Runs `cycles` sweeps of a named method with the fused kernels. Trace
/// conventions match ripg::run.
IterationTrace run_method(const CsrMatrix& A, std::span<const double> b, const MethodSpec& spec,
                          std::span<const double> x0, Index cycles,
                          std::optional<std::span<const double>> reference = std::nullopt,
                          const BlockPartition* partition = nullptr, Index snapshot_stride = 0);

}  // namespace rpx
