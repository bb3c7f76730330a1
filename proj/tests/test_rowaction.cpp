#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rpx/rowaction.hpp"

using namespace rpx;

namespace {

double max_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (Index j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

struct Problem {
  CsrMatrix A;
  Vector b;
  Vector x0;
};

Problem random_problem(std::uint64_t seed, Index m = 30, Index n = 20) {
  std::mt19937_64 rng(seed);
  Problem P{oracle::random_sparse(m, n, 0.3, rng, {7}), {}, {}};
  P.b = oracle::gaussian(m, rng, 2.0);
  P.x0 = oracle::gaussian(n, rng, 1.0);
  return P;
}

}  // namespace

class EquivalenceWeb : public ::testing::TestWithParam<Method> {};

TEST_P(EquivalenceWeb, FusedMatchesGenericPerStep) {
  const Method kind = GetParam();
  const Problem P = random_problem(100 + static_cast<int>(kind));
  const bool block = kind == Method::BlockKaczmarz || kind == Method::DampedBlock;
  const BlockPartition part = block ? BlockPartition::uniform(P.A.rows(), P.A.rows()) : BlockPartition{};
  for (Control::Kind ck : {Control::Kind::Cyclic, Control::Kind::Shuffled, Control::Kind::Random}) {
    MethodSpec spec{kind, 1.4, Schedule::constant(0.05), {ck, 5}, ConstraintSet::uniform_box(-1.0, 1.0), 0.3};
    const auto comps = method_components(P.A, P.b, kind, spec.mu, block ? &part : nullptr);
    SolveConfig cfg{spec.rho, spec.schedule, spec.control, spec.constraint, 5, Variant::RIPG1, 1};
    const IterationTrace generic = run(comps, P.x0, cfg);
    const IterationTrace fused = run_method(P.A, P.b, spec, P.x0, 5, std::nullopt, block ? &part : nullptr, 1);
    ASSERT_EQ(generic.snapshots.size(), fused.snapshots.size());
    for (Index k = 0; k < fused.snapshots.size(); ++k)
      EXPECT_LE(max_diff(generic.snapshots[k].second, fused.snapshots[k].second), 1e-14)
          << method_name(kind) << " cycle " << k;
    EXPECT_EQ(generic.step_sizes, fused.step_sizes);
    for (Index k = 0; k < fused.objective.size(); ++k)
      EXPECT_NEAR(generic.objective[k], fused.objective[k], 1e-12 * (1 + std::abs(generic.objective[k])));
  }
  // Single steps of a cyclic sweep, one row at a time.
  if (!block) {
    const auto comps = method_components(P.A, P.b, kind, 0.3);
    Vector x = P.x0;
    const ConstraintSet C = ConstraintSet::uniform_box(-1.0, 1.0);
    for (Index i = 0; i < comps.size(); ++i) {
      const Index idx[] = {i};
      Vector fused;
      switch (kind) {
        case Method::Art: fused = art_sweep(P.A, P.b, x, 1.4, C, idx); break;
        case Method::DampedArt: fused = damped_art_sweep(P.A, P.b, x, 1.4, 0.05, C, idx); break;
        case Method::L1Art: fused = robust_art_sweep(P.A, P.b, x, 1.4, 0.05, 0.0, C, idx); break;
        case Method::HuberArt: fused = robust_art_sweep(P.A, P.b, x, 1.4, 0.05, 0.3, C, idx); break;
        case Method::DistArt: fused = dist_art_sweep(P.A, P.b, x, 1.4, 0.05, C, idx); break;
        default: fused = dist_sq_art_sweep(P.A, P.b, x, 1.4, 0.05, C, idx); break;
      }
      const Vector generic = ripg1_step(x, comps[i], 0.05, 1.4, C).x_next;
      EXPECT_LE(max_diff(fused, generic), 1e-14) << method_name(kind) << " row " << i;
      x = generic;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllMethods, EquivalenceWeb,
                         ::testing::Values(Method::Art, Method::DampedArt, Method::BlockKaczmarz, Method::DampedBlock,
                                           Method::L1Art, Method::HuberArt, Method::DistArt, Method::DistSqArt),
                         [](const auto& info) {
                           std::string s = method_name(info.param);
                           for (char& c : s)
                             if (c == '-') c = '_';
                           return s;
                         });

TEST(Art, IdentitySolvesInOneSweep) {
  const CsrMatrix I = oracle::from_dense(Eigen::MatrixXd::Identity(4, 4));
  const Vector y{1.0, -2.0, 3.5, 0.25};
  EXPECT_EQ(art_sweep(I, y, Vector(4, 0.0), 1.0, ConstraintSet::all_space()), y);
}

TEST(Art, GradientFormCoincides) {
  const Problem P = random_problem(3);
  auto A = std::make_shared<const CsrMatrix>(P.A);
  std::vector<ComponentSpec> grad;
  for (Index i = 0; i < P.A.rows(); ++i) grad.push_back({gterm::Zero{}, hterm::NormalizedResidual{RowRef{A, i}, P.b[i]}});
  SolveConfig cfg;
  cfg.rho = 0.7;
  cfg.cycles = 5;
  cfg.schedule = Schedule::constant(1.0);
  const IterationTrace g = run(grad, P.x0, cfg);
  const IterationTrace f = run_method(P.A, P.b, {Method::Art, 0.7}, P.x0, 5);
  EXPECT_LE(max_diff(g.final_x, f.final_x), 1e-14);
}

TEST(Art, ConsistentResidualVanishes) {
  std::mt19937_64 rng(4);
  const CsrMatrix A = oracle::random_sparse(15, 25, 0.4, rng);
  const Vector b = spmv(A, oracle::gaussian(25, rng));
  Vector x(25, 0.0);
  for (int k = 0; k < 3000; ++k) x = art_sweep(A, b, std::move(x), 1.0, ConstraintSet::all_space());
  const Vector r = spmv(A, x);
  EXPECT_LE(distance(r, b), 1e-9 * norm2(b));
}

TEST(Sweeps, FixedPointsOnZeroRowsAndZeroResidual) {
  const Problem P = random_problem(5);
  // Make b consistent with x0 so every residual is zero.
  const Vector b = spmv(P.A, P.x0);
  const ConstraintSet C = ConstraintSet::all_space();
  EXPECT_LE(max_diff(art_sweep(P.A, b, P.x0, 1.3, C), P.x0), 1e-14);
  EXPECT_LE(max_diff(damped_art_sweep(P.A, b, P.x0, 1.3, 0.5, C), P.x0), 1e-14);
  EXPECT_LE(max_diff(robust_art_sweep(P.A, b, P.x0, 1.3, 0.5, 0.0, C), P.x0), 1e-14);
  EXPECT_LE(max_diff(robust_art_sweep(P.A, b, P.x0, 1.3, 0.5, 0.2, C), P.x0), 1e-14);
  EXPECT_LE(max_diff(dist_art_sweep(P.A, b, P.x0, 1.3, 0.5, C), P.x0), 1e-14);
  EXPECT_LE(max_diff(dist_sq_art_sweep(P.A, b, P.x0, 1.3, 0.5, C), P.x0), 1e-14);
  // Row 7 is empty: a sweep restricted to it leaves x alone whatever b says.
  const Index only[] = {7};
  EXPECT_EQ(art_sweep(P.A, P.b, P.x0, 1.3, C, only), P.x0);
  EXPECT_EQ(damped_art_sweep(P.A, P.b, P.x0, 1.3, 0.5, C, only), P.x0);
}

TEST(DampedArt, LargeStepApproachesArt) {
  const Problem P = random_problem(6);
  const ConstraintSet C = ConstraintSet::all_space();
  Vector x = P.x0, y = P.x0;
  for (Index i = 0; i < P.A.rows(); ++i) {
    const Index idx[] = {i};
    x = art_sweep(P.A, P.b, x, 1.0, C, idx);
    y = damped_art_sweep(P.A, P.b, x, 1.0, 1e12, C, idx);
    EXPECT_LE(distance(x, y), 1e-6);
  }
}

TEST(BlockKaczmarz, SizeOneBlocksAreArt) {
  const Problem P = random_problem(7);
  const BlockPartition part = BlockPartition::uniform(P.A.rows(), P.A.rows());
  const ConstraintSet C = ConstraintSet::nonneg();
  const Vector a = art_sweep(P.A, P.b, P.x0, 1.2, C);
  const Vector b = block_kaczmarz_sweep(P.A, P.b, part, P.x0, 1.2, std::nullopt, C);
  EXPECT_LE(max_diff(a, b), 1e-13);
}

TEST(BlockKaczmarz, SingleBlockIsPseudoinverseStep) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd M = oracle::to_eigen(oracle::gaussian(6 * 10, rng)).reshaped(6, 10);
  const Vector b = oracle::gaussian(6, rng), x0 = oracle::gaussian(10, rng);
  const BlockPartition part = BlockPartition::uniform(6, 1);
  const Vector x = block_kaczmarz_sweep(oracle::from_dense(M), b, part, x0, 1.0, std::nullopt, ConstraintSet::all_space());
  const Eigen::VectorXd ref = oracle::to_eigen(x0) - oracle::pinv_solve(M, M * oracle::to_eigen(x0) - oracle::to_eigen(b));
  EXPECT_LE((oracle::to_eigen(x) - ref).norm(), 1e-10 * ref.norm());
  EXPECT_LE((M * oracle::to_eigen(x) - oracle::to_eigen(b)).norm(), 1e-10);
}

TEST(BlockKaczmarz, DampedLimitAndRankDeficiency) {
  const Problem P = random_problem(9, 12, 20);
  const BlockPartition part = BlockPartition::uniform(12, 3);
  const ConstraintSet C = ConstraintSet::all_space();
  const Vector u = block_kaczmarz_sweep(P.A, P.b, part, P.x0, 1.0, std::nullopt, C);
  const Vector d = block_kaczmarz_sweep(P.A, P.b, part, P.x0, 1.0, 1e12, C);
  EXPECT_LE(distance(u, d), 1e-5);

  std::vector<Triplet> t{{0, 0, 1.0}, {1, 0, 2.0}};
  const CsrMatrix R = csr_from_triplets(2, 2, t);
  const BlockPartition one = BlockPartition::uniform(2, 1);
  EXPECT_THROW(block_kaczmarz_sweep(R, Vector{1, 1}, one, Vector{0, 0}, 1.0, std::nullopt, C), RankDeficientBlock);
  EXPECT_NO_THROW(block_kaczmarz_sweep(R, Vector{1, 1}, one, Vector{0, 0}, 1.0, 1.0, C));
}

TEST(Robust, OutlierStepIsBounded) {
  const Vector a{0.6, 0.8};
  const CsrMatrix A = oracle::from_dense(Eigen::RowVector2d(0.6, 0.8));
  const Vector b{1e6};
  const Vector x0{0.0, 0.0};
  const double rho = 1.5, t = 0.01;
  const Vector r = robust_art_sweep(A, b, x0, rho, t, 0.0, ConstraintSet::all_space());
  EXPECT_NEAR(norm2(r), rho * t * 1.0, 1e-15);
  const Vector h = robust_art_sweep(A, b, x0, rho, t, 0.5, ConstraintSet::all_space());
  EXPECT_NEAR(norm2(h), rho * t * 1.0, 1e-15);
  const Vector art = art_sweep(A, b, x0, rho, ConstraintSet::all_space());
  EXPECT_GT(norm2(art), 1e6);
  // Small residual: relaxed projection.
  const Vector s = robust_art_sweep(A, Vector{0.001}, x0, rho, t, 0.0, ConstraintSet::all_space());
  EXPECT_NEAR(s[0], rho * 0.001 * 0.6, 1e-15);
}

TEST(Equilibration, Examples) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = 4.0;
  const Preconditioner T = build_column_equilibration(oracle::from_dense(D), 2.0);
  EXPECT_EQ(T.diag, (Vector{0.5, 0.25}));
  const Preconditioner U = build_column_equilibration(oracle::from_dense(Eigen::MatrixXd::Identity(3, 3)), 2.0);
  EXPECT_EQ(U.diag, (Vector{1.0, 1.0, 1.0}));
}

TEST(Equilibration, UnitColumnsAfterScaling) {
  std::mt19937_64 rng(10);
  const CsrMatrix A = oracle::random_sparse(40, 15, 0.3, rng);
  const Eigen::MatrixXd M = A.to_dense();
  bool all_columns = true;
  for (Eigen::Index j = 0; j < M.cols(); ++j) all_columns &= M.col(j).cwiseAbs().maxCoeff() > 0.0;
  ASSERT_TRUE(all_columns);
  for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
    const Preconditioner T = build_column_equilibration(A, p);
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const Eigen::VectorXd c = M.col(j) * T.diag[j];
      const double n = std::isinf(p) ? c.cwiseAbs().maxCoeff() : (p == 1.0 ? c.cwiseAbs().sum() : c.norm());
      EXPECT_NEAR(n, 1.0, 1e-12);
    }
  }
}

TEST(Equilibration, ZeroColumnListed) {
  std::vector<Triplet> t{{0, 0, 1.0}, {1, 2, 1.0}};
  try {
    build_column_equilibration(csr_from_triplets(2, 4, t), 2.0);
    FAIL();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('1'), std::string::npos);
    EXPECT_NE(msg.find('3'), std::string::npos);
  }
  EXPECT_THROW(build_column_equilibration(csr_from_triplets(2, 4, t), 3.0), std::invalid_argument);
}

TEST(Preconditioned, IdentityMatchesGenericTvSplitting) {
  std::mt19937_64 rng(11);
  const Index N = 5;
  const CsrMatrix A = oracle::random_sparse(12, N * N, 0.3, rng);
  const Vector b = oracle::gaussian(12, rng), x0 = oracle::uniform(N * N, rng, 0.0, 1.0);
  auto op = std::make_shared<const DiffOperator>(build_diff_operator(N, N));
  const double lambda = 0.6, tau = 1e-3, t = 0.2, rho = 1.3;
  const TvSweepParams tv{op.get(), lambda, tau, WeightMode::Floor};
  auto shared = std::make_shared<const CsrMatrix>(A);
  std::vector<ComponentSpec> comps;
  for (Index i = 0; i < 12; ++i)
    comps.push_back({gterm::QuadraticResidual{RowRef{shared, i}, b[i]}, hterm::ScaledTvSubgrad{op, lambda / 12, tau}});
  const ConstraintSet C = ConstraintSet::uniform_box(0.0, 1.0);
  SolveConfig cfg{rho, Schedule::constant(t), {}, C, 3, Variant::RIPG1, 1};
  const IterationTrace g = run(comps, x0, cfg);
  Vector x = x0, y = x0;
  for (Index c = 0; c < 3; ++c) {
    x = tv_art_sweep(A, b, x, rho, t, tv, C);
    y = preconditioned_ripg1_sweep(A, b, Preconditioner{Vector(N * N, 1.0)}, y, rho, t, tv, C);
    EXPECT_LE(max_diff(x, g.snapshots[c + 1].second), 1e-14);
    EXPECT_LE(max_diff(x, y), 1e-14);
  }
}

TEST(Preconditioned, ZeroLambdaIsDampedArt) {
  const Problem P = random_problem(12);
  const DiffOperator op = build_diff_operator(4, 5);
  const TvSweepParams tv{&op, 0.0, 1e-4, WeightMode::Floor};
  const ConstraintSet C = ConstraintSet::uniform_box(-1.0, 1.0);
  const Vector a = tv_art_sweep(P.A, P.b, P.x0, 1.1, 0.3, tv, C);
  const Vector b = damped_art_sweep(P.A, P.b, P.x0, 1.1, 0.3, C);
  EXPECT_EQ(a, b);
}

TEST(Preconditioned, UniformScalingIsStepRescaling) {
  std::mt19937_64 rng(13);
  const Index N = 4;
  const CsrMatrix A = oracle::random_sparse(10, N * N, 0.4, rng);
  const Vector b = oracle::gaussian(10, rng);
  const DiffOperator op = build_diff_operator(N, N);
  const TvSweepParams tv{&op, 0.4, 1e-3, WeightMode::Floor};
  const ConstraintSet C = ConstraintSet::uniform_box(-2.0, 2.0);
  for (double c : {0.5, 2.0, 3.0}) {
    Vector x = oracle::gaussian(N * N, rng), y = x;
    for (int k = 0; k < 5; ++k) {
      x = preconditioned_ripg1_sweep(A, b, Preconditioner{Vector(N * N, c)}, x, 1.2, 0.1, tv, C);
      y = preconditioned_ripg1_sweep(A, b, Preconditioner{}, y, 1.2, 0.1 * c * c, tv, C);
      EXPECT_LE(max_diff(x, y), 1e-10);
    }
  }
}

TEST(Preconditioned, UnsupportedConfigurations) {
  const Problem P = random_problem(14);
  const DiffOperator op = build_diff_operator(4, 5);
  const TvSweepParams tv{&op, 0.1, 1e-4, WeightMode::Floor};
  EXPECT_THROW(preconditioned_ripg1_sweep(P.A, P.b, Preconditioner{Vector(20, -1.0)}, P.x0, 1.0, 0.1, tv,
                                          ConstraintSet::all_space()),
               UnsupportedConfiguration);
  EXPECT_THROW(preconditioned_ripg1_sweep(P.A, P.b, Preconditioner{Vector(3, 1.0)}, P.x0, 1.0, 0.1, tv,
                                          ConstraintSet::all_space()),
               std::invalid_argument);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::Art, Method::DampedArt, Method::BlockKaczmarz, Method::DampedBlock, Method::L1Art,
                   Method::HuberArt, Method::DistArt, Method::DistSqArt})
    EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("sirt"), std::invalid_argument);
}
