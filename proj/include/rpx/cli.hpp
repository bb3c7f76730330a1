#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpx/prox.hpp"
#include "rpx/ripg.hpp"
#include "rpx/sparse.hpp"

namespace rpx {

const char* version();

/// Every parameter of every command. A manifest stores the full set, so a
/// replay reconstructs the run exactly.
struct Options {
  std::string command;
  std::string out;

  // generate
  Index n = 64;
  Index projections = 60;
  Index rays = 90;
  double eta = 0.02;
  std::uint64_t seed = 0;
  double pixel_size = 1.0;

  // solve / reference
  std::string problem;
  std::string reference;
  std::string method = "art";
  double rho = 1.0;
  double t0 = 1.0;
  /// When > 0, t0 is replaced by 1 / (damping_fraction * max_i ||a_i||^2).
  double damping_fraction = 0.0;
  std::string schedule = "constant";
  std::string control = "cyclic";
  std::string variant = "ripg1";
  std::string constraint = "none";
  Index cycles = 10;
  std::vector<double> lambda{0.0};
  /// 0 selects the default 1e-4 * max(range(x0), 1).
  double tau = 0.0;
  /// Row blocks for the block methods; 0 means one block per projection.
  Index blocks = 0;
  double mu = 0.0;
  Index snapshot_stride = 0;
  Index max_iters = 5000;
  double tol = 1e-7;

  // boundcheck
  Index problems = 100;
  Index components = 5;
  Index dim = 3;
  std::vector<double> rhos{0.3, 1.0, 1.7};
};

std::vector<std::string> solve_methods();

/// Flag parsers; throw std::invalid_argument on unknown values.
ConstraintSet parse_constraint(const std::string& s);
Schedule parse_schedule(const std::string& s, double t0);
Control parse_control(const std::string& s, std::uint64_t seed);
Variant parse_variant(const std::string& s);

/// Each command writes its outputs and a manifest.json into opts.out.
/// Return value is the process exit code.
int cmd_generate(const Options& opts);
int cmd_solve(const Options& opts);
int cmd_reference(const Options& opts);
int cmd_boundcheck(const Options& opts);
/// Re-executes the command recorded in a manifest, writing into `out`.
int cmd_replay(const std::string& manifest_path, const std::string& out);

int dispatch(const Options& opts);

std::string options_to_json(const Options& opts);
Options options_from_json(const std::string& text);

}  // namespace rpx
