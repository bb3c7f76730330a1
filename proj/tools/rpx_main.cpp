#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "rpx/cli.hpp"
#include "rpx/io.hpp"

namespace {

void add_problem_flags(CLI::App* c, rpx::Options& o) {
  c->add_option("--problem", o.problem, "problem bundle directory")->required();
  c->add_option("--constraint", o.constraint, "none, nonneg or box:lo:hi");
  c->add_option("--seed", o.seed, "random seed");
  c->add_option("--out", o.out, "output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relaxed incremental proximal gradient and row-action reconstruction"};
  app.set_version_flag("--version", std::string(rpx::version()));
  app.require_subcommand(1);
  rpx::Options o;

  auto* gen = app.add_subcommand("generate", "build a parallel-beam tomography problem bundle");
  gen->add_option("--n", o.n, "image side length")->check(CLI::PositiveNumber);
  gen->add_option("--projections", o.projections, "number of projection angles")->check(CLI::PositiveNumber);
  gen->add_option("--rays", o.rays, "rays per projection")->check(CLI::Range(2, 1 << 20));
  gen->add_option("--eta", o.eta, "relative noise level")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", o.seed, "noise seed");
  gen->add_option("--pixel-size", o.pixel_size, "pixel side length")->check(CLI::PositiveNumber);
  gen->add_option("--out", o.out, "output directory")->required();

  auto* solve = app.add_subcommand("solve", "run a reconstruction method on a bundle");
  add_problem_flags(solve, o);
  std::string methods;
  for (const auto& m : rpx::solve_methods()) methods += (methods.empty() ? "" : ", ") + m;
  solve->add_option("--method", o.method, methods)->check(CLI::IsMember(rpx::solve_methods()));
  solve->add_option("--reference", o.reference, "vector file used for relative errors (default x_exact)");
  solve->add_option("--rho", o.rho, "relaxation parameter in (0, 2)");
  solve->add_option("--t0", o.t0, "initial step size");
  solve->add_option("--damping-fraction", o.damping_fraction, "set t0 = 1/(f * max row norm squared)");
  solve->add_option("--schedule", o.schedule)->check(CLI::IsMember({"constant", "diminishing"}));
  solve->add_option("--control", o.control)->check(CLI::IsMember({"cyclic", "random", "shuffled"}));
  solve->add_option("--variant", o.variant)->check(CLI::IsMember({"ripg1", "ripg2"}));
  solve->add_option("--cycles", o.cycles, "number of cycles");
  solve->add_option("--lambda", o.lambda, "TV weight")->expected(1);
  solve->add_option("--tau", o.tau, "TV smoothing (0 selects the default)");
  solve->add_option("--blocks", o.blocks, "row blocks (0 means one per projection)");
  solve->add_option("--mu", o.mu, "Huber parameter for huber-art");
  solve->add_option("--snapshot-stride", o.snapshot_stride, "save x every k cycles (0 disables)");

  auto* ref = app.add_subcommand("reference", "solve the TV-regularized least-squares problem for a lambda grid");
  add_problem_flags(ref, o);
  ref->add_option("--lambda", o.lambda, "comma-separated lambda grid")->delimiter(',');
  ref->add_option("--max-iters", o.max_iters, "iteration cap");
  ref->add_option("--tol", o.tol, "relative residual tolerance");

  auto* bc = app.add_subcommand("boundcheck", "check the constant-step error bound on random problems");
  bc->add_option("--problems", o.problems, "number of random problems");
  bc->add_option("--components", o.components, "components per problem");
  bc->add_option("--dim", o.dim, "problem dimension");
  bc->add_option("--rho", o.rhos, "comma-separated relaxation parameters")->delimiter(',');
  bc->add_option("--t0", o.t0, "step size");
  bc->add_option("--cycles", o.cycles, "cycles per problem");
  bc->add_option("--seed", o.seed, "suite seed");
  bc->add_option("--out", o.out, "output directory")->required();
  bc->callback([&] {
    if (bc->count("--t0") == 0) o.t0 = 0.01;
  });

  auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  std::string manifest;
  replay->add_option("manifest", manifest, "manifest.json")->required();
  replay->add_option("--out", o.out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (replay->parsed()) return rpx::cmd_replay(manifest, o.out);
    o.command = app.get_subcommands().front()->get_name();
    return rpx::dispatch(o);
  } catch (const std::invalid_argument& e) {
    std::cerr << "rpx: usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rpx: error: " << e.what() << "\n";
    return 1;
  }
}
