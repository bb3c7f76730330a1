#include "rpx/theory.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace rpx {
namespace {

void check_rho(double rho) {
  if (!(rho > 0.0 && rho < 2.0)) throw std::invalid_argument("rho must lie in (0, 2)");
}

double sq(double v) { return v * v; }

// (f(from) - f(to)) / max(||from - to||, 1e-12), clipped below at 0.
double ratio(double f_from, double f_to, std::span<const double> from, std::span<const double> to) {
  const double diff = f_from - f_to;
  if (!(diff > 0.0)) return 0.0;
  return diff / std::max(distance(from, to), 1e-12);
}

}  // namespace

double alpha(double rho) {
  check_rho(rho);
  return rho <= 1.5 ? 1.0 / (2.0 - rho) : 4.0 * (rho - 1.0);
}

double beta(double rho, Index m, Variant variant) {
  const double a = alpha(rho);
  if (m == 0) throw std::invalid_argument("beta: m must be >= 1");
  const double rm = rho * static_cast<double>(m);
  return variant == Variant::RIPG1 ? 4.0 + (1.0 - rho + a) / rm : 4.0 + (4.0 * (1.0 - rho) + a) / rm;
}

double constant_step_error_bound(double rho, double t, Index m, double c, Variant variant) {
  return rho * t * beta(rho, m, variant) * sq(static_cast<double>(m)) * c * c / 2.0;
}

BoundReport check_prop1_bound(std::span<const ComponentSpec> comps, const CycleRecord& cycle,
                              std::span<const double> y, double rho, double t, Variant variant) {
  const Index m = comps.size();
  if (m == 0) throw std::invalid_argument("check_prop1_bound: no components");
  if (cycle.x.size() != m + 1 || cycle.w.size() != m || cycle.z.size() != m)
    throw std::invalid_argument("check_prop1_bound: cycle record is incomplete");
  if (!(t > 0.0)) throw std::invalid_argument("check_prop1_bound: t must be positive");
  const auto& xk = cycle.x.front();
  if (y.size() != xk.size()) throw DimensionError("check_prop1_bound: y dimension mismatch");

  double c = 0.0;
  for (Index j = 0; j < m; ++j) {
    const auto& x = cycle.x[j];
    const auto& w = cycle.w[j];
    const auto& z = cycle.z[j];
    const ComponentSpec& f = comps[j];
    if (variant == Variant::RIPG1) {
      // g subgradient at w is (x - w)/t, h subgradient at w is (w - z)/t.
      c = std::max({c, distance(x, w) / t, distance(w, z) / t});
      c = std::max(c, ratio(value_g(f.g, xk), value_g(f.g, w), xk, w));
      c = std::max(c, ratio(value_h(f.h, xk), value_h(f.h, w), xk, w));
    } else {
      // h subgradient at x is (x - w)/t, g subgradient at z is (w - z)/t.
      c = std::max({c, distance(x, w) / t, distance(w, z) / t});
      c = std::max(c, ratio(value_g(f.g, xk), value_g(f.g, x), xk, x));
      c = std::max(c, ratio(value_h(f.h, xk), value_h(f.h, x), xk, x));
      c = std::max(c, ratio(value_g(f.g, x), value_g(f.g, z), x, z));
    }
  }

  BoundReport r;
  r.c_empirical = c;
  const double md = static_cast<double>(m);
  r.lhs = sq(distance(cycle.x.back(), y));
  r.rhs = sq(distance(xk, y)) - 2.0 * rho * t * (objective(comps, xk) - objective(comps, y)) +
          beta(rho, m, variant) * sq(rho * t * md * c);
  r.slack = r.rhs - r.lhs;
  r.holds = r.slack >= -1e-9 * std::abs(r.rhs);
  return r;
}

std::vector<BoundSuiteCase> run_bound_suite(const BoundSuiteConfig& cfg) {
  std::vector<BoundSuiteCase> out;
  if (cfg.problems == 0) return out;
  if (cfg.m == 0 || cfg.n == 0) throw std::invalid_argument("run_bound_suite: m and n must be >= 1");
  const ConstraintSet C = ConstraintSet::uniform_box(-cfg.box, cfg.box);
  for (Index p = 0; p < cfg.problems; ++p) {
    std::mt19937_64 rng(cfg.seed * 1000003ULL + p);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-cfg.box, cfg.box);

    std::vector<Triplet> ga, ha;
    for (Index i = 0; i < cfg.m; ++i)
      for (Index j = 0; j < cfg.n; ++j) {
        ga.push_back({i, j, gauss(rng)});
        ha.push_back({i, j, gauss(rng)});
      }
    auto G = std::make_shared<const CsrMatrix>(csr_from_triplets(cfg.m, cfg.n, ga));
    auto H = std::make_shared<const CsrMatrix>(csr_from_triplets(cfg.m, cfg.n, ha));
    std::vector<ComponentSpec> comps;
    for (Index i = 0; i < cfg.m; ++i)
      comps.push_back({gterm::QuadraticResidual{RowRef{G, i}, gauss(rng)},
                       hterm::NormalizedResidual{RowRef{H, i}, gauss(rng)}});
    Vector x0(cfg.n), y(cfg.n);
    for (double& v : x0) v = unif(rng);
    for (double& v : y) v = unif(rng);

    for (Variant variant : cfg.variants)
      for (double rho : cfg.rhos) {
        BoundSuiteCase sc;
        sc.problem = p;
        sc.rho = rho;
        sc.variant = variant;
        sc.beta = beta(rho, cfg.m, variant);
        bool first = true;
        Vector x = x0;
        for (Index k = 0; k < cfg.cycles; ++k) {
          CycleRecord rec = run_cycle(comps, x, cfg.t, rho, C, variant);
          const BoundReport rep = check_prop1_bound(comps, rec, y, rho, cfg.t, variant);
          if (first || rep.slack < sc.worst.slack) sc.worst = rep;
          sc.all_hold = sc.all_hold && rep.holds;
          ++sc.cycles_checked;
          first = false;
          x = rec.x.back();
        }
        out.push_back(sc);
      }
  }
  return out;
}

}  // namespace rpx
