#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rpx/prox.hpp"
#include "rpx/ripg.hpp"

namespace rpx {

/// 1/(2 - rho) for rho <= 3/2 and 4(rho - 1) above; continuous at 3/2.
double alpha(double rho);

/// R-IPG1: 4 + (1 - rho + alpha)/(rho m).  R-IPG2: 4 + (4(1 - rho) + alpha)/(rho m).
double beta(double rho, Index m, Variant variant);

/// Asymptotic error level rho t beta m^2 c^2 / 2 of a constant step t.
double constant_step_error_bound(double rho, double t, Index m, double c, Variant variant);

struct BoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double c_empirical = 0.0;
  double slack = 0.0;
  bool holds = false;
};

/// Checks ||x_{k+m} - y||^2 <= ||x_k - y||^2 - 2 rho t (f(x_k) - f(y)) + beta rho^2 t^2 m^2 c^2
/// on one recorded cycle, with c the largest quantity along the cycle that
/// the variant's assumptions bound: implicit subgradient norms and the ratios
/// (f_j(x_k) - f_j(v)) / ||x_k - v|| (distance floored at 1e-12).
BoundReport check_prop1_bound(std::span<const ComponentSpec> comps, const CycleRecord& cycle,
                              std::span<const double> y, double rho, double t, Variant variant);

struct BoundSuiteConfig {
  Index problems = 100;
  Index m = 5;
  Index n = 3;
  double t = 0.01;
  std::vector<double> rhos{0.3, 1.0, 1.7};
  std::vector<Variant> variants{Variant::RIPG1, Variant::RIPG2};
  Index cycles = 10;
  double box = 1.0;
  std::uint64_t seed = 1;
};

struct BoundSuiteCase {
  Index problem = 0;
  double rho = 1.0;
  Variant variant = Variant::RIPG1;
  double beta = 0.0;
  /// Report of the cycle with the smallest slack.
  BoundReport worst;
  bool all_hold = true;
  Index cycles_checked = 0;
};

/// Random problems with g_i = 1/2 (a_i.x - b_i)^2, h_i = 1/2 (c_i.x - d_i)^2/||c_i||^2
/// and C = [-box, box]^n, each run for `cycles` cyclic cycles from a random
/// feasible start with a random feasible y; every cycle is checked.
std::vector<BoundSuiteCase> run_bound_suite(const BoundSuiteConfig& cfg);

}  // namespace rpx
