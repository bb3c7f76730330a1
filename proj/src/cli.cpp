#include "rpx/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>

#include "json.hpp"
#include "rpx/io.hpp"
#include "rpx/prox.hpp"
#include "rpx/reference.hpp"
#include "rpx/ripg.hpp"
#include "rpx/rowaction.hpp"
#include "rpx/theory.hpp"
#include "rpx/tomo.hpp"
#include "rpx/tv.hpp"

#ifndef RPX_VERSION
#define RPX_VERSION "0.0.0"
#endif

namespace rpx {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

json to_json(const Options& o) {
  return json{{"command", o.command},
              {"n", o.n},
              {"projections", o.projections},
              {"rays", o.rays},
              {"eta", o.eta},
              {"seed", o.seed},
              {"pixel_size", o.pixel_size},
              {"problem", o.problem},
              {"reference", o.reference},
              {"method", o.method},
              {"rho", o.rho},
              {"t0", o.t0},
              {"damping_fraction", o.damping_fraction},
              {"schedule", o.schedule},
              {"control", o.control},
              {"variant", o.variant},
              {"constraint", o.constraint},
              {"cycles", o.cycles},
              {"lambda", o.lambda},
              {"tau", o.tau},
              {"blocks", o.blocks},
              {"mu", o.mu},
              {"snapshot_stride", o.snapshot_stride},
              {"max_iters", o.max_iters},
              {"tol", o.tol},
              {"problems", o.problems},
              {"components", o.components},
              {"dim", o.dim},
              {"rhos", o.rhos}};
}

template <class T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string abs_path(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

void prepare_out(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (!fs::is_directory(out)) throw std::runtime_error("cannot create output directory " + out);
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_manifest(const std::string& out, const Options& opts, json extra) {
  json m;
  m["command"] = opts.command;
  m["version"] = version();
  m["options"] = to_json(opts);
  for (auto& [k, v] : extra.items()) m[k] = v;
  write_text(join(out, "manifest.json"), m.dump(2) + "\n");
}

struct Bundle {
  json manifest;
  Index N = 0;
  Index projections = 0;
  Index rays = 0;
  CsrMatrix A;
  Vector b;
  Vector x_exact;
};

Bundle load_bundle(const std::string& dir) {
  if (dir.empty()) throw UsageError("--problem is required");
  Bundle B;
  B.manifest = json::parse(read_file(join(dir, "manifest.json")));
  const json& o = B.manifest.at("options");
  B.N = o.at("n").get<Index>();
  B.projections = o.at("projections").get<Index>();
  B.rays = o.at("rays").get<Index>();
  B.A = read_matrix(join(dir, "A.rpx"));
  B.b = read_vector(join(dir, "b.rpv"));
  B.x_exact = read_vector(join(dir, "x_exact.rpv"));
  if (B.A.rows() != B.b.size() || B.A.cols() != B.N * B.N || B.x_exact.size() != B.N * B.N)
    throw FormatError(dir + ": inconsistent problem bundle");
  return B;
}

BlockPartition make_partition(const Options& o, const Bundle& B) {
  if (o.blocks == 0) return BlockPartition::fixed_size(B.A.rows(), B.rays);
  if (o.blocks > B.A.rows()) throw UsageError("--blocks exceeds the number of rows");
  return BlockPartition::uniform(B.A.rows(), o.blocks);
}

// Runs cycles of a fused sweep with the same trace conventions as ripg::run.
template <class Sweep>
IterationTrace trace_cycles(std::span<const ComponentSpec> comps, Vector x, Index cycles, const Schedule& schedule,
                            const Control& control_rule, std::optional<std::span<const double>> reference,
                            Index stride, Sweep sweep) {
  const Index m = comps.size();
  const double ref_norm = reference ? norm2(*reference) : 0.0;
  IterationTrace trace;
  auto record = [&](Index cycle, double t) {
    if (reference) trace.relative_error.push_back(distance(x, *reference) / (ref_norm > 0.0 ? ref_norm : 1.0));
    trace.objective.push_back(trace_objective(comps, x));
    trace.step_sizes.push_back(t);
    if (stride > 0 && cycle % stride == 0) trace.snapshots.emplace_back(cycle, x);
  };
  record(0, 0.0);
  IndexControl control(control_rule, m);
  std::vector<Index> order;
  for (Index cycle = 1; cycle <= cycles; ++cycle) {
    const Index k0 = (cycle - 1) * m;
    const double t = step_size(schedule, k0, m);
    order.clear();
    if (control_rule.kind != Control::Kind::Cyclic)
      for (Index s = 0; s < m; ++s) order.push_back(control.next(k0 + s));
    Vector next = sweep(x, t, order);
    if (!all_finite(next)) {
      trace.final_x = std::move(x);
      throw NonFiniteIterate("non-finite iterate in cycle " + std::to_string(cycle), k0 + m - 1, std::move(trace));
    }
    x = std::move(next);
    record(cycle, t);
  }
  trace.final_x = std::move(x);
  return trace;
}

bool is_row_method(const std::string& m) {
  for (const char* s : {"art", "damped-art", "block-kaczmarz", "damped-block", "l1-art", "huber-art", "dist-art",
                        "dist-sq-art"})
    if (m == s) return true;
  return false;
}

}  // namespace

ConstraintSet parse_constraint(const std::string& s) {
  if (s == "none") return ConstraintSet::all_space();
  if (s == "nonneg") return ConstraintSet::nonneg();
  if (s.rfind("box:", 0) == 0) {
    const auto rest = s.substr(4);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw UsageError("constraint box needs box:lo:hi");
    try {
      return ConstraintSet::uniform_box(std::stod(rest.substr(0, colon)), std::stod(rest.substr(colon + 1)));
    } catch (const std::invalid_argument&) {
      throw UsageError("bad box bounds in " + s);
    }
  }
  throw UsageError("unknown constraint " + s + " (none, nonneg, box:lo:hi)");
}

Schedule parse_schedule(const std::string& s, double t0) {
  if (s == "constant") return Schedule::constant(t0);
  if (s == "diminishing") return Schedule::diminishing(t0);
  throw UsageError("unknown schedule " + s);
}

Control parse_control(const std::string& s, std::uint64_t seed) {
  if (s == "cyclic") return {Control::Kind::Cyclic, seed};
  if (s == "random") return {Control::Kind::Random, seed};
  if (s == "shuffled") return {Control::Kind::Shuffled, seed};
  throw UsageError("unknown control " + s);
}

Variant parse_variant(const std::string& s) {
  if (s == "ripg1") return Variant::RIPG1;
  if (s == "ripg2") return Variant::RIPG2;
  throw UsageError("unknown variant " + s);
}

const char* version() { return RPX_VERSION; }

std::vector<std::string> solve_methods() {
  return {"art",    "damped-art", "block-kaczmarz", "damped-block",   "l1-art",   "huber-art",
          "dist-art", "dist-sq-art", "tv-art",      "precond-tv-art", "block-tv", "block-tv-prox"};
}

std::string options_to_json(const Options& opts) { return to_json(opts).dump(2); }

Options options_from_json(const std::string& text) {
  const json j = json::parse(text);
  Options o;
  get_if(j, "command", o.command);
  get_if(j, "n", o.n);
  get_if(j, "projections", o.projections);
  get_if(j, "rays", o.rays);
  get_if(j, "eta", o.eta);
  get_if(j, "seed", o.seed);
  get_if(j, "pixel_size", o.pixel_size);
  get_if(j, "problem", o.problem);
  get_if(j, "reference", o.reference);
  get_if(j, "method", o.method);
  get_if(j, "rho", o.rho);
  get_if(j, "t0", o.t0);
  get_if(j, "damping_fraction", o.damping_fraction);
  get_if(j, "schedule", o.schedule);
  get_if(j, "control", o.control);
  get_if(j, "variant", o.variant);
  get_if(j, "constraint", o.constraint);
  get_if(j, "cycles", o.cycles);
  get_if(j, "lambda", o.lambda);
  get_if(j, "tau", o.tau);
  get_if(j, "blocks", o.blocks);
  get_if(j, "mu", o.mu);
  get_if(j, "snapshot_stride", o.snapshot_stride);
  get_if(j, "max_iters", o.max_iters);
  get_if(j, "tol", o.tol);
  get_if(j, "problems", o.problems);
  get_if(j, "components", o.components);
  get_if(j, "dim", o.dim);
  get_if(j, "rhos", o.rhos);
  return o;
}

int cmd_generate(const Options& opts) {
  prepare_out(opts.out);
  const Geometry g = make_geometry(opts.n, opts.projections, opts.rays, opts.pixel_size);
  const TomoProblem P = make_sinogram(g, opts.eta, opts.seed);
  write_matrix(join(opts.out, "A.rpx"), P.A);
  write_vector(join(opts.out, "b.rpv"), P.b);
  write_vector(join(opts.out, "b_exact.rpv"), P.b_exact);
  write_vector(join(opts.out, "x_exact.rpv"), P.x_exact);
  const auto [lo, hi] = write_pgm(join(opts.out, "x_exact.pgm"), P.x_exact, g.N);
  json extra;
  extra["files"] = {{"matrix", "A.rpx"}, {"b", "b.rpv"}, {"b_exact", "b_exact.rpv"}, {"x_exact", "x_exact.rpv"}};
  extra["geometry"] = {{"N", g.N},
                       {"p", g.p},
                       {"r", g.r},
                       {"pixel_size", g.pixel_size},
                       {"detector_width", g.detector_width},
                       {"angles_deg", g.angles_deg}};
  extra["images"] = {{"x_exact.pgm", {{"min", lo}, {"max", hi}}}};
  extra["rows"] = P.A.rows();
  extra["nnz"] = P.A.nnz();
  write_manifest(opts.out, opts, extra);
  return 0;
}

int cmd_solve(const Options& opts_in) {
  Options opts = opts_in;
  opts.problem = abs_path(opts.problem);
  opts.reference = abs_path(opts.reference);
  const auto& methods = solve_methods();
  if (std::find(methods.begin(), methods.end(), opts.method) == methods.end())
    throw UsageError("unknown method " + opts.method);
  if (!(opts.rho > 0.0 && opts.rho < 2.0)) throw UsageError("--rho must lie in (0, 2)");
  if (opts.lambda.empty()) throw UsageError("--lambda needs a value");
  prepare_out(opts.out);

  const Bundle B = load_bundle(opts.problem);
  const Vector ref = opts.reference.empty() ? B.x_exact : read_vector(opts.reference);
  if (ref.size() != B.A.cols()) throw UsageError("reference vector has the wrong length");

  double t0 = opts.t0;
  if (opts.damping_fraction > 0.0) {
    const Vector rn = row_squared_norms(B.A);
    t0 = 1.0 / (opts.damping_fraction * *std::max_element(rn.begin(), rn.end()));
  }
  if (!(t0 > 0.0)) throw UsageError("--t0 must be positive");
  const Schedule schedule = parse_schedule(opts.schedule, t0);
  const Control control = parse_control(opts.control, opts.seed);
  const Variant variant = parse_variant(opts.variant);
  const ConstraintSet C = parse_constraint(opts.constraint);
  const Index n = B.A.cols();
  const Vector x0(n, 0.0);
  const double lambda = opts.lambda.front();
  const double tau = opts.tau > 0.0 ? opts.tau : default_tau(x0);
  const std::span<const double> refspan(ref);

  SolveConfig cfg;
  cfg.rho = opts.rho;
  cfg.schedule = schedule;
  cfg.control = control;
  cfg.constraint = C;
  cfg.cycles = opts.cycles;
  cfg.variant = variant;
  cfg.snapshot_stride = opts.snapshot_stride;

  IterationTrace trace;
  bool diverged = false;
  std::string diverged_msg;
  Index diverged_step = 0;
  try {
    if (is_row_method(opts.method)) {
      MethodSpec spec{parse_method(opts.method), opts.rho, schedule, control, C, opts.mu};
      const BlockPartition part = make_partition(opts, B);
      trace = run_method(B.A, B.b, spec, x0, opts.cycles, refspan, &part, opts.snapshot_stride);
    } else {
      auto op = std::make_shared<const DiffOperator>(build_diff_operator(B.N, B.N));
      auto shared = std::make_shared<const CsrMatrix>(B.A);
      std::vector<ComponentSpec> comps;
      if (opts.method == "tv-art" || opts.method == "precond-tv-art") {
        const double w = lambda / static_cast<double>(B.A.rows());
        for (Index i = 0; i < B.A.rows(); ++i)
          comps.push_back({gterm::QuadraticResidual{RowRef{shared, i}, B.b[i]},
                           hterm::ScaledTvSubgrad{op, w, tau, WeightMode::Floor}});
        const TvSweepParams tv{op.get(), lambda, tau, WeightMode::Floor};
        if (opts.method == "precond-tv-art") {
          if (variant != Variant::RIPG1) throw UsageError("precond-tv-art supports --variant ripg1 only");
          const Preconditioner T = build_column_equilibration(B.A, 2.0);
          trace = trace_cycles(comps, x0, opts.cycles, schedule, control, refspan, opts.snapshot_stride,
                               [&](const Vector& x, double t, std::span<const Index> order) {
                                 return preconditioned_ripg1_sweep(B.A, B.b, T, x, opts.rho, t, tv, C, order);
                               });
        } else if (variant == Variant::RIPG1) {
          trace = trace_cycles(comps, x0, opts.cycles, schedule, control, refspan, opts.snapshot_stride,
                               [&](const Vector& x, double t, std::span<const Index> order) {
                                 return tv_art_sweep(B.A, B.b, x, opts.rho, t, tv, C, order);
                               });
        } else {
          trace = run(comps, x0, cfg, refspan);
        }
      } else {
        const BlockPartition part = make_partition(opts, B);
        const auto blocks = build_blocks(B.A, part);
        const double w = lambda / static_cast<double>(part.count());
        for (Index q = 0; q < part.count(); ++q) {
          ComponentSpec c;
          c.g = gterm::BlockLs{std::make_shared<const BlockSystem>(blocks[q]),
                               Vector(B.b.begin() + static_cast<std::ptrdiff_t>(part.begin(q)),
                                      B.b.begin() + static_cast<std::ptrdiff_t>(part.end(q)))};
          if (opts.method == "block-tv") c.h = hterm::ScaledTvSubgrad{op, w, tau, WeightMode::Floor};
          comps.push_back(std::move(c));
        }
        if (opts.method == "block-tv-prox") comps.push_back({gterm::ScaledTv{op, lambda}, hterm::Zero{}});
        trace = run(comps, x0, cfg, refspan);
      }
    }
  } catch (const NonFiniteIterate& e) {
    diverged = true;
    diverged_msg = e.what();
    diverged_step = e.step;
    trace = e.partial;
  }

  write_history_csv(join(opts.out, "history.csv"), trace);
  write_vector(join(opts.out, "x_final.rpv"), trace.final_x);
  const auto [lo, hi] = write_pgm(join(opts.out, "x_final.pgm"), trace.final_x, B.N);
  json snaps = json::array();
  for (const auto& [cycle, x] : trace.snapshots) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%06zu.rpv", cycle);
    write_vector(join(opts.out, name), x);
    snaps.push_back(name);
  }
  json extra;
  extra["resolved"] = {{"t0", t0}, {"tau", tau}, {"lambda", lambda}};
  extra["files"] = {{"history", "history.csv"}, {"x_final", "x_final.rpv"}, {"snapshots", snaps}};
  extra["images"] = {{"x_final.pgm", {{"min", lo}, {"max", hi}}}};
  extra["diverged"] = diverged;
  if (diverged) {
    extra["diverged_step"] = diverged_step;
    extra["diverged_message"] = diverged_msg;
  }
  extra["completed_cycles"] = trace.objective.empty() ? 0 : trace.objective.size() - 1;
  write_manifest(opts.out, opts, extra);
  if (diverged) std::cerr << "rpx solve: run diverged: " << diverged_msg << "\n";
  return 0;
}

int cmd_reference(const Options& opts_in) {
  Options opts = opts_in;
  opts.problem = abs_path(opts.problem);
  if (opts.lambda.empty()) throw UsageError("--lambda needs at least one value");
  prepare_out(opts.out);
  const Bundle B = load_bundle(opts.problem);
  const ConstraintSet C = parse_constraint(opts.constraint);
  const DiffOperator D = build_diff_operator(B.N, B.N);
  PDConfig cfg;
  cfg.max_iters = opts.max_iters;
  cfg.tol = opts.tol;
  cfg.seed = opts.seed;

  const double xnorm = norm2(B.x_exact);
  std::string csv = "lambda,relative_error,objective,iterations,converged,residual\n";
  json entries = json::array();
  Index best = 0;
  double best_err = 0.0;
  for (Index k = 0; k < opts.lambda.size(); ++k) {
    const double lam = opts.lambda[k];
    if (!(lam >= 0.0)) throw UsageError("--lambda values must be nonnegative");
    const PDResult r = solve_tv_ls(B.A, B.b, D, lam, C, cfg);
    const double err = distance(r.x, B.x_exact) / (xnorm > 0.0 ? xnorm : 1.0);
    char name[64];
    std::snprintf(name, sizeof name, "reference_%03zu", k);
    write_vector(join(opts.out, std::string(name) + ".rpv"), r.x);
    const auto [lo, hi] = write_pgm(join(opts.out, std::string(name) + ".pgm"), r.x, B.N);
    csv += format_double(lam) + ',' + format_double(err) + ',' + format_double(r.objective.back()) + ',' +
           std::to_string(r.iterations) + ',' + (r.converged ? "1" : "0") + ',' + format_double(r.residual) + '\n';
    entries.push_back({{"lambda", lam},
                       {"file", std::string(name) + ".rpv"},
                       {"relative_error", err},
                       {"converged", r.converged},
                       {"pgm", {{"min", lo}, {"max", hi}}}});
    if (k == 0 || err < best_err) {
      best = k;
      best_err = err;
    }
    if (k == best) write_vector(join(opts.out, "reference.rpv"), r.x);
  }
  write_text(join(opts.out, "summary.csv"), csv);
  json extra;
  extra["references"] = entries;
  extra["best"] = {{"index", best}, {"lambda", opts.lambda[best]}, {"relative_error", best_err}};
  write_manifest(opts.out, opts, extra);
  return 0;
}

int cmd_boundcheck(const Options& opts) {
  prepare_out(opts.out);
  BoundSuiteConfig cfg;
  cfg.problems = opts.problems;
  cfg.m = opts.components;
  cfg.n = opts.dim;
  cfg.t = opts.t0;
  cfg.rhos = opts.rhos;
  cfg.cycles = opts.cycles;
  cfg.seed = opts.seed;
  const auto cases = run_bound_suite(cfg);

  std::string text;
  if (!cases.empty()) {
    for (Variant v : cfg.variants)
      for (double rho : cfg.rhos)
        text += "# beta(rho=" + format_double(rho) + ", m=" + std::to_string(cfg.m) +
                ", " + (v == Variant::RIPG1 ? "ripg1" : "ripg2") + ")=" + format_double(beta(rho, cfg.m, v)) + "\n";
    text += "problem,variant,rho,beta,c_empirical,lhs,rhs,slack,holds\n";
  }
  Index failures = 0;
  for (const auto& c : cases) {
    failures += c.all_hold ? 0 : 1;
    text += std::to_string(c.problem) + ',' + (c.variant == Variant::RIPG1 ? "ripg1" : "ripg2") + ',' +
            format_double(c.rho) + ',' + format_double(c.beta) + ',' + format_double(c.worst.c_empirical) + ',' +
            format_double(c.worst.lhs) + ',' + format_double(c.worst.rhs) + ',' + format_double(c.worst.slack) +
            ',' + (c.all_hold ? "true" : "false") + '\n';
  }
  write_text(join(opts.out, "bound_report.csv"), text);
  write_manifest(opts.out, opts, json{{"cases", cases.size()}, {"failures", failures}});
  return failures == 0 ? 0 : 1;
}

int cmd_replay(const std::string& manifest_path, const std::string& out) {
  const json m = json::parse(read_file(manifest_path));
  Options o = options_from_json(m.at("options").dump());
  o.out = out;
  return dispatch(o);
}

int dispatch(const Options& opts) {
  if (opts.command == "generate") return cmd_generate(opts);
  if (opts.command == "solve") return cmd_solve(opts);
  if (opts.command == "reference") return cmd_reference(opts);
  if (opts.command == "boundcheck") return cmd_boundcheck(opts);
  throw UsageError("unknown command " + opts.command);
}

}  // namespace rpx
