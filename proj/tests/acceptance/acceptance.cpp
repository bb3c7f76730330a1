// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "prox_suite.hpp"
#include "rpx/cli.hpp"
#include "rpx/reference.hpp"
#include "rpx/rowaction.hpp"
#include "rpx/theory.hpp"
#include "rpx/tomo.hpp"

using namespace rpx;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (Index j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

// 1. Closed-form proxes against brute-force oracles.
Outcome prox_oracles() {
  const auto r = oracle::run_prox_suite(1000, 20240601);
  bool ok = r.max_gap.size() == 7;
  double worst = 0.0;
  std::string names;
  for (const auto& [name, gap] : r.max_gap) {
    ok = ok && gap <= 1e-8 && r.instances.at(name) == 1000;
    worst = std::max(worst, gap);
    names += fmt(" %s=%.1e", name.c_str(), gap);
  }
  return {ok, fmt("worst gap %.2e (limit 1e-8), 1000 instances each:", worst) + names};
}

struct RandomSystem {
  CsrMatrix A;
  Vector b, x0;
};

RandomSystem random_system(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RandomSystem s{oracle::random_sparse(30, 20, 0.3, rng, {7}), {}, {}};
  s.b = oracle::gaussian(30, rng, 2.0);
  s.x0 = oracle::gaussian(20, rng);
  return s;
}

// 2. Fused sweeps against the generic driver, one step at a time, and
// R-IPG1 against R-IPG2 when one of g, h vanishes.
Outcome equivalence_web() {
  const double rho = 1.4, t = 0.05, mu = 0.3;
  const ConstraintSet C = ConstraintSet::uniform_box(-1.0, 1.0);
  const Method methods[] = {Method::Art,   Method::DampedArt, Method::BlockKaczmarz, Method::DampedBlock,
                            Method::L1Art, Method::HuberArt,  Method::DistArt,       Method::DistSqArt};
  double fused_gap = 0.0, variant_gap = 0.0;
  Index steps = 0;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const RandomSystem P = random_system(seed);
    const BlockPartition single = BlockPartition::uniform(P.A.rows(), P.A.rows());
    const auto blocks = build_blocks(P.A, single);
    for (Method kind : methods) {
      const bool block = kind == Method::BlockKaczmarz || kind == Method::DampedBlock;
      const auto comps = method_components(P.A, P.b, kind, mu, block ? &single : nullptr);
      auto fused = [&](const Vector& x, Index i) {
        const Index idx[] = {i};
        switch (kind) {
          case Method::Art: return art_sweep(P.A, P.b, x, rho, C, idx);
          case Method::DampedArt: return damped_art_sweep(P.A, P.b, x, rho, t, C, idx);
          case Method::BlockKaczmarz: return block_kaczmarz_sweep(blocks, single, P.b, x, rho, std::nullopt, C, idx);
          case Method::DampedBlock: return block_kaczmarz_sweep(blocks, single, P.b, x, rho, t, C, idx);
          case Method::L1Art: return robust_art_sweep(P.A, P.b, x, rho, t, 0.0, C, idx);
          case Method::HuberArt: return robust_art_sweep(P.A, P.b, x, rho, t, mu, C, idx);
          case Method::DistArt: return dist_art_sweep(P.A, P.b, x, rho, t, C, idx);
          case Method::DistSqArt: return dist_sq_art_sweep(P.A, P.b, x, rho, t, C, idx);
        }
        return x;
      };
      Vector xf = P.x0, xg = P.x0, x1 = P.x0, x2 = P.x0;
      for (Index cycle = 0; cycle < 5; ++cycle)
        for (Index i = 0; i < comps.size(); ++i) {
          xf = fused(xf, i);
          xg = ripg1_step(xg, comps[i], t, rho, C).x_next;
          x1 = ripg1_step(x1, comps[i], t, rho, C).x_next;
          x2 = ripg2_step(x2, comps[i], t, rho, C).x_next;
          fused_gap = std::max(fused_gap, max_abs_diff(xf, xg));
          variant_gap = std::max(variant_gap, max_abs_diff(x1, x2));
          ++steps;
        }
    }
    // g = 0: every component is a normalized-residual gradient term.
    auto shared = std::make_shared<const CsrMatrix>(P.A);
    std::vector<ComponentSpec> grads;
    for (Index i = 0; i < P.A.rows(); ++i) grads.push_back({gterm::Zero{}, hterm::NormalizedResidual{RowRef{shared, i}, P.b[i]}});
    Vector x1 = P.x0, x2 = P.x0;
    for (Index cycle = 0; cycle < 5; ++cycle)
      for (const auto& c : grads) {
        x1 = ripg1_step(x1, c, t, rho, C).x_next;
        x2 = ripg2_step(x2, c, t, rho, C).x_next;
        variant_gap = std::max(variant_gap, max_abs_diff(x1, x2));
      }
  }
  return {fused_gap <= 1e-14 && variant_gap <= 1e-14,
          fmt("fused vs generic max |diff| %.1e, RIPG1 vs RIPG2 max |diff| %.1e (limit 1e-14), %zu steps x 8 methods",
              fused_gap, variant_gap, static_cast<std::size_t>(steps / 8))};
}

// 3. Large damping parameter recovers ART and the pseudoinverse block step.
Outcome art_limits() {
  const RandomSystem P = random_system(21);
  const ConstraintSet C = ConstraintSet::all_space();
  Vector x = P.x0;
  double row_gap = 0.0;
  for (Index cycle = 0; cycle < 5; ++cycle)
    for (Index i = 0; i < P.A.rows(); ++i) {
      const Index idx[] = {i};
      const Vector damped = damped_art_sweep(P.A, P.b, x, 1.0, 1e12, C, idx);
      x = art_sweep(P.A, P.b, x, 1.0, C, idx);
      row_gap = std::max(row_gap, max_abs_diff(damped, x));
    }

  std::mt19937_64 rng(22);
  const CsrMatrix A = oracle::random_sparse(30, 20, 0.5, rng);
  const BlockPartition part = BlockPartition::uniform(30, 6);
  const auto blocks = build_blocks(A, part);
  const Eigen::MatrixXd dense = A.to_dense();
  double block_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector b = oracle::gaussian(30, rng), xb = oracle::gaussian(20, rng);
    for (Index q = 0; q < part.count(); ++q) {
      const auto bq = std::span<const double>(b).subspan(part.begin(q), part.size(q));
      const Vector damped = prox_block_ls(blocks[q], bq, 1e12, xb).point;
      const Eigen::MatrixXd Aq = dense.middleRows(static_cast<Eigen::Index>(part.begin(q)),
                                                  static_cast<Eigen::Index>(part.size(q)));
      const Eigen::VectorXd pinv =
          oracle::to_eigen(xb) - oracle::pinv_solve(Aq, Aq * oracle::to_eigen(xb) - oracle::to_eigen(bq));
      block_gap = std::max(block_gap, max_abs_diff(damped, oracle::from_eigen(pinv)));
    }
  }
  return {row_gap <= 1e-6 && block_gap <= 1e-5,
          fmt("damped ART vs ART per step %.1e (limit 1e-6); damped block vs pseudoinverse %.1e (limit 1e-5)", row_gap,
              block_gap)};
}

// 4. ART from zero on a consistent underdetermined system.
Outcome minimum_norm() {
  std::mt19937_64 rng(31);
  Eigen::MatrixXd M(20, 50);
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = oracle::gaussian(1, rng)[0];
  const CsrMatrix A = oracle::from_dense(M);
  const Eigen::VectorXd xt = oracle::to_eigen(oracle::gaussian(50, rng));
  const Eigen::VectorXd be = M * xt;
  const Vector b = oracle::from_eigen(be);
  const Vector xmn = oracle::from_eigen(oracle::pinv_solve(M, be));
  const double scale = norm2(xmn);
  Vector x(50, 0.0);
  Index cycles = 0;
  double err = 1.0;
  while (cycles < 5000 && err > 1e-6) {
    x = art_sweep(A, b, std::move(x), 1.0, ConstraintSet::all_space());
    ++cycles;
    err = distance(x, xmn) / scale;
  }
  return {err <= 1e-6, fmt("relative distance to A^+ b %.2e after %zu cycles (limit 1e-6 within 5000)", err,
                           static_cast<std::size_t>(cycles))};
}

// 5. The per-cycle bound of the convergence analysis.
Outcome bound_harness() {
  BoundSuiteConfig cfg;
  cfg.problems = 100;
  cfg.rhos = {0.3, 1.0, 1.7};
  cfg.variants = {Variant::RIPG1, Variant::RIPG2};
  const auto cases = run_bound_suite(cfg);
  bool ok = cases.size() == 600;
  Index cycles = 0, failing = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (const auto& c : cases) {
    cycles += c.cycles_checked;
    if (!c.all_hold) ++failing;
    worst_ratio = std::min(worst_ratio, c.worst.slack / std::abs(c.worst.rhs));
    if (c.rho == 1.0 && c.beta != 4.0 + 1.0 / static_cast<double>(cfg.m)) ok = false;
  }
  ok = ok && failing == 0;
  return {ok, fmt("%zu cases, %zu cycles checked, %zu failing; min slack/rhs %.3e (limit -1e-9); beta(1,%zu)=4+1/m",
                  cases.size(), static_cast<std::size_t>(cycles), static_cast<std::size_t>(failing), worst_ratio,
                  static_cast<std::size_t>(cfg.m))};
}

// 6. Diminishing steps reach the constrained least-squares optimum.
Outcome diminishing_step() {
  std::mt19937_64 rng(41);
  Eigen::MatrixXd M(40, 25);
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = oracle::gaussian(1, rng)[0];
  const Eigen::VectorXd be = oracle::to_eigen(oracle::gaussian(40, rng));
  const double lo = -0.1, hi = 0.1;
  const Eigen::VectorXd xs = oracle::box_ls(M, be, lo, hi);
  const double fstar = 0.5 * (M * xs - be).squaredNorm();

  auto A = std::make_shared<const CsrMatrix>(oracle::from_dense(M));
  const Vector b = oracle::from_eigen(be);
  std::vector<ComponentSpec> comps;
  for (Index i = 0; i < A->rows(); ++i) comps.push_back({gterm::QuadraticResidual{RowRef{A, i}, b[i]}, hterm::Zero{}});
  SolveConfig cfg;
  cfg.rho = 1.0;
  cfg.schedule = Schedule::diminishing(1.0);
  cfg.constraint = ConstraintSet::uniform_box(lo, hi);
  cfg.cycles = 8000;
  cfg.snapshot_stride = 1;
  const IterationTrace tr = run(comps, Vector(25, 0.0), cfg);
  double best = std::numeric_limits<double>::infinity(), best_long = best;
  for (const auto& [cycle, x] : tr.snapshots) {
    const double f = 0.5 * (M * oracle::to_eigen(x) - be).squaredNorm();
    if (cycle <= 2000) best = std::min(best, f);
    best_long = std::min(best_long, f);
  }
  Index active = 0;
  for (Eigen::Index j = 0; j < xs.size(); ++j) active += xs(j) <= lo + 1e-9 || xs(j) >= hi - 1e-9;
  const double gap = (best - fstar) / fstar;
  return {gap <= 1e-3 && gap >= -1e-9,
          fmt("best f over 2000 cycles %.10g, oracle f* %.10g, relative gap %.2e (limit 1e-3); %zu of 25 bounds "
              "active; gap after 8000 cycles %.2e",
              best, fstar, gap, static_cast<std::size_t>(active), (best_long - fstar) / fstar)};
}

// 7. Damping suppresses corner noise.
Outcome corner_noise() {
  const Index N = 32;
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TomoProblem P = make_sinogram(make_geometry(N, 36, 32), 0.08, seed);
    double mx = 0.0;
    for (Index i = 0; i < P.A.rows(); ++i) mx = std::max(mx, P.A.row(i).squared_norm());
    const double t = 1.0 / (0.1 * mx);
    const ConstraintSet C = ConstraintSet::all_space();
    Vector xa(N * N, 0.0), xd(N * N, 0.0);
    for (int c = 0; c < 8; ++c) {
      xa = art_sweep(P.A, P.b, std::move(xa), 1.0, C);
      xd = damped_art_sweep(P.A, P.b, std::move(xd), 1.0, t, C);
    }
    double out_a = 0.0, out_d = 0.0, in_a = 0.0, in_d = 0.0;
    Index n_out = 0, n_in = 0;
    const double half = 0.5 * static_cast<double>(N);
    for (Index j = 0; j < N; ++j)
      for (Index i = 0; i < N; ++i) {
        const double dx = static_cast<double>(j) + 0.5 - half, dy = static_cast<double>(i) + 0.5 - half;
        const Index k = i + N * j;
        const double ea = std::abs(xa[k] - P.x_exact[k]), ed = std::abs(xd[k] - P.x_exact[k]);
        if (dx * dx + dy * dy <= half * half) {
          in_a += ea;
          in_d += ed;
          ++n_in;
        } else {
          out_a += ea;
          out_d += ed;
          ++n_out;
        }
      }
    out_a /= static_cast<double>(n_out);
    out_d /= static_cast<double>(n_out);
    in_a /= static_cast<double>(n_in);
    in_d /= static_cast<double>(n_in);
    const double rel = std::abs(in_d - in_a) / in_a;
    const bool corners = out_d < out_a, centre = rel < 0.10;
    ok = ok && corners && centre;
    detail += fmt(" [seed %d: outside %.4f vs %.4f %s, inside %.4f vs %.4f rel %.3f %s]", static_cast<int>(seed), out_d,
                  out_a, corners ? "ok" : "FAIL", in_d, in_a, rel, centre ? "ok" : "FAIL");
  }
  return {ok, "damped vs ART mean abs error after 8 cycles (inside limit 10%):" + detail};
}

// 8. Relaxation pattern of damped ART.
Outcome relaxation_pattern() {
  const double rhos[] = {0.1, 0.5, 1.0, 1.5, 1.9};
  Index good = 0;
  std::string detail;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TomoProblem P = make_sinogram(make_geometry(64, 60, 90), 0.02, seed);
    const Vector x0(P.A.cols(), 0.0);
    double best_small = 1e300, best_large = 1e300, rho_small = 0.0, rho_large = 0.0;
    for (double rho : rhos) {
      for (double t : {0.001, 1.0}) {
        const MethodSpec spec{Method::DampedArt, rho, Schedule::constant(t), {}, ConstraintSet::all_space()};
        const IterationTrace tr = run_method(P.A, P.b, spec, x0, 10, std::span<const double>(P.x_exact));
        if (t < 0.5) {
          if (tr.relative_error.back() < best_small) {
            best_small = tr.relative_error.back();
            rho_small = rho;
          }
        } else {
          const double mn = *std::min_element(tr.relative_error.begin(), tr.relative_error.end());
          if (mn < best_large) {
            best_large = mn;
            rho_large = rho;
          }
        }
      }
    }
    const bool hit = rho_small >= 1.0 && rho_large <= 0.5;
    good += hit;
    detail += fmt(" [seed %d: t=0.001 best rho %.1f (%.4f), t=1 best rho %.1f (%.4f)%s]", static_cast<int>(seed),
                  rho_small, best_small, rho_large, best_large, hit ? "" : " miss");
  }
  return {good >= 2, fmt("%zu of 3 seeds show the pattern (need 2):", static_cast<std::size_t>(good)) + detail};
}

// 9. TV-regularized block R-IPG1 against the primal-dual reference.
Outcome tv_blocks() {
  const Index N = 64;
  const Geometry g = make_geometry(N, 60, 90);
  const TomoProblem P = make_sinogram(g, 0.01, 1);
  auto D = std::make_shared<const DiffOperator>(build_diff_operator(N, N));
  const ConstraintSet C = ConstraintSet::nonneg();
  const double xn = norm2(P.x_exact);

  double ref_err = 1e300, lambda = 0.0;
  for (double lam : {0.0625, 0.125, 0.25, 0.5, 1.0}) {
    PDConfig cfg;
    cfg.max_iters = 5000;
    cfg.tol = 1e-7;
    const PDResult r = solve_tv_ls(P.A, P.b, *D, lam, C, cfg);
    const double e = distance(r.x, P.x_exact) / xn;
    if (e < ref_err) {
      ref_err = e;
      lambda = lam;
    }
  }

  const BlockPartition part = projection_blocks(g);
  const auto blocks = build_blocks(P.A, part);
  const Vector x0(P.A.cols(), 0.0);
  const double tau = default_tau(x0);
  std::vector<ComponentSpec> comps;
  for (Index q = 0; q < part.count(); ++q)
    comps.push_back({gterm::BlockLs{std::make_shared<const BlockSystem>(blocks[q]),
                                    Vector(P.b.begin() + static_cast<std::ptrdiff_t>(part.begin(q)),
                                           P.b.begin() + static_cast<std::ptrdiff_t>(part.end(q)))},
                     hterm::ScaledTvSubgrad{D, lambda / static_cast<double>(part.count()), tau, WeightMode::Floor}});

  double best_cell = 1e300, best_over = 1e300, best_under = 1e300, cell_rho = 0.0, cell_t0 = 0.0;
  for (double rho : {0.1, 0.5, 1.0, 1.5, 1.9})
    for (double t0 : {1e-3, 3.1623e-3, 1e-2, 3.1623e-2, 1e-1, 3.1623e-1, 1.0}) {
      SolveConfig cfg;
      cfg.rho = rho;
      cfg.schedule = Schedule::diminishing(t0);
      cfg.constraint = C;
      cfg.cycles = 20;
      const IterationTrace tr = run(comps, x0, cfg, std::span<const double>(P.x_exact));
      const double mn = *std::min_element(tr.relative_error.begin(), tr.relative_error.end());
      if (mn < best_cell) {
        best_cell = mn;
        cell_rho = rho;
        cell_t0 = t0;
      }
      if (rho > 1.0) best_over = std::min(best_over, tr.relative_error.back());
      if (rho < 1.0) best_under = std::min(best_under, tr.relative_error.back());
    }
  const bool close = best_cell - ref_err <= 0.03;
  const bool over = best_over <= best_under + 0.01;
  return {close && over,
          fmt("reference lambda %g error %.4f; best cell rho %.1f t0 %g error %.4f (limit +0.03); after 20 cycles "
              "best overrelaxed %.4f vs best underrelaxed %.4f (limit +0.01)",
              lambda, ref_err, cell_rho, cell_t0, best_cell, best_over, best_under)};
}

// 10. Constants of the bound.
Outcome theory_constants() {
  bool ok = alpha(1.0) == 1.0 && std::abs(alpha(1.5) - 2.0) <= 1e-15;
  for (Variant v : {Variant::RIPG1, Variant::RIPG2}) ok = ok && std::abs(beta(1.0, 4, v) - 4.25) <= 1e-15;
  double worst = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double rho = 0.5 + k * 1e-3;
    for (Variant v : {Variant::RIPG1, Variant::RIPG2}) worst = std::max(worst, beta(rho, 100, v));
  }
  ok = ok && worst <= 4.1;
  return {ok, fmt("alpha(1)=%.17g alpha(1.5)=%.17g beta(1,4)=%.17g/%.17g max beta(rho in [0.5,1.5],100)=%.6f", alpha(1.0),
                  alpha(1.5), beta(1.0, 4, Variant::RIPG1), beta(1.0, 4, Variant::RIPG2), worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 11. Replaying a manifest reproduces every output byte for byte.
Outcome replay_determinism() {
  const fs::path root = fs::temp_directory_path() / fmt("rpx_acceptance_%d", static_cast<int>(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  std::vector<Options> runs;
  Options gen;
  gen.command = "generate";
  gen.n = 16;
  gen.projections = 12;
  gen.rays = 16;
  gen.eta = 0.02;
  gen.seed = 5;
  gen.out = (root / "problem").string();
  runs.push_back(gen);

  Options solve;
  solve.command = "solve";
  solve.problem = gen.out;
  solve.cycles = 4;
  solve.snapshot_stride = 2;
  for (const char* m : {"art", "damped-art", "huber-art", "block-tv", "tv-art"}) {
    solve.method = m;
    solve.rho = 1.3;
    solve.t0 = 0.05;
    solve.mu = 0.2;
    solve.lambda = {0.5};
    solve.control = std::string(m) == "damped-art" ? "random" : "shuffled";
    solve.seed = 9;
    solve.constraint = "nonneg";
    solve.out = (root / (std::string("solve_") + m)).string();
    runs.push_back(solve);
  }
  Options ref;
  ref.command = "reference";
  ref.problem = gen.out;
  ref.lambda = {0.1, 0.5};
  ref.max_iters = 300;
  ref.constraint = "nonneg";
  ref.out = (root / "reference").string();
  runs.push_back(ref);
  Options bound;
  bound.command = "boundcheck";
  bound.problems = 5;
  bound.t0 = 0.01;
  bound.out = (root / "bound").string();
  runs.push_back(bound);

  Index files = 0, csv = 0;
  std::string bad;
  for (const Options& o : runs) {
    if (dispatch(o) != 0) bad += " " + o.out + ":exit";
    const std::string again = o.out + "_replay";
    if (cmd_replay((fs::path(o.out) / "manifest.json").string(), again) != 0) bad += " " + again + ":exit";
    for (const auto& e : fs::directory_iterator(o.out)) {
      if (!e.is_regular_file()) continue;
      ++files;
      csv += e.path().extension() == ".csv";
      const fs::path other = fs::path(again) / e.path().filename();
      if (!fs::exists(other) || slurp(e.path()) != slurp(other)) bad += " " + e.path().filename().string();
    }
  }
  fs::remove_all(root);
  return {bad.empty() && csv >= 7,
          fmt("%zu runs, %zu files (%zu CSV) compared after replay", runs.size(), static_cast<std::size_t>(files),
              static_cast<std::size_t>(csv)) +
              (bad.empty() ? std::string() : "; mismatches:" + bad)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "prox oracle suite", 30.0, prox_oracles},
      {2, "equivalence web", 10.0, equivalence_web},
      {3, "ART limits", 5.0, art_limits},
      {4, "minimum-norm convergence", 20.0, minimum_norm},
      {5, "bound harness", 60.0, bound_harness},
      {6, "diminishing-step convergence", 60.0, diminishing_step},
      {7, "corner-noise suppression", 30.0, corner_noise},
      {8, "relaxation pattern", 120.0, relaxation_pattern},
      {9, "TV block experiment", 300.0, tv_blocks},
      {10, "theory constants", 1.0, theory_constants},
      {11, "replay determinism", 60.0, replay_determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d %s  %s (%.2f s, budget %.0f s%s): %s\n", c.id, pass ? "PASS" : "FAIL", c.name, secs,
                c.budget_s, in_time ? "" : ", over budget", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, all.size());
  return failed == 0 ? 0 : 1;
}
