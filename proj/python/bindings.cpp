#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>

#include "rpx/cli.hpp"
#include "rpx/prox.hpp"
#include "rpx/reference.hpp"
#include "rpx/ripg.hpp"
#include "rpx/rowaction.hpp"
#include "rpx/sparse.hpp"
#include "rpx/theory.hpp"
#include "rpx/tomo.hpp"
#include "rpx/tv.hpp"

namespace py = pybind11;
using namespace rpx;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Vector to_vec(const DArray& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return Vector(a.data(), a.data() + a.size());
}

DArray to_array(const Vector& v) {
  DArray out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

template <class T>
py::array_t<std::int64_t> to_index_array(const std::vector<T>& v) {
  py::array_t<std::int64_t> out(static_cast<py::ssize_t>(v.size()));
  auto* p = out.mutable_data();
  for (std::size_t k = 0; k < v.size(); ++k) p[k] = static_cast<std::int64_t>(v[k]);
  return out;
}

CsrMatrix csr_from_arrays(Index nrows, Index ncols, const IArray& indptr, const IArray& indices, const DArray& data) {
  std::vector<Index> offsets(indptr.data(), indptr.data() + indptr.size());
  std::vector<Index> cols(indices.data(), indices.data() + indices.size());
  return CsrMatrix(nrows, ncols, std::move(offsets), std::move(cols), to_vec(data));
}

py::dict trace_dict(const IterationTrace& t) {
  py::dict d;
  d["relative_error"] = to_array(t.relative_error);
  d["objective"] = to_array(t.objective);
  d["step_sizes"] = to_array(t.step_sizes);
  d["x"] = to_array(t.final_x);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Relaxed incremental proximal gradient and row-action solvers.";
  m.attr("__version__") = version();

  py::class_<CsrMatrix>(m, "CsrMatrix")
      .def(py::init(&csr_from_arrays), py::arg("nrows"), py::arg("ncols"), py::arg("indptr"), py::arg("indices"),
           py::arg("data"))
      .def_property_readonly("shape", [](const CsrMatrix& A) { return py::make_tuple(A.rows(), A.cols()); })
      .def_property_readonly("nnz", &CsrMatrix::nnz)
      .def_property_readonly("indptr", [](const CsrMatrix& A) { return to_index_array(A.row_offsets()); })
      .def_property_readonly("indices", [](const CsrMatrix& A) { return to_index_array(A.col_indices()); })
      .def_property_readonly("data", [](const CsrMatrix& A) { return to_array(A.values()); })
      .def("matvec", [](const CsrMatrix& A, const DArray& x) { return to_array(spmv(A, to_vec(x))); })
      .def("rmatvec", [](const CsrMatrix& A, const DArray& y) { return to_array(spmv_t(A, to_vec(y))); })
      .def("row_norms", [](const CsrMatrix& A) { return to_array(row_norms(A)); })
      .def("__repr__", [](const CsrMatrix& A) {
        return "<CsrMatrix " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + ", nnz=" +
               std::to_string(A.nnz()) + ">";
      });

  m.def(
      "csr_from_triplets",
      [](Index nrows, Index ncols, const IArray& rows, const IArray& cols, const DArray& vals) {
        if (rows.size() != cols.size() || rows.size() != vals.size())
          throw std::invalid_argument("rows, cols and vals must have the same length");
        std::vector<Triplet> t(static_cast<std::size_t>(rows.size()));
        for (py::ssize_t k = 0; k < rows.size(); ++k)
          t[k] = {static_cast<Index>(rows.data()[k]), static_cast<Index>(cols.data()[k]), vals.data()[k]};
        return csr_from_triplets(nrows, ncols, t);
      },
      py::arg("nrows"), py::arg("ncols"), py::arg("rows"), py::arg("cols"), py::arg("vals"));

  m.def(
      "prox",
      [](const std::string& kind, const DArray& a, double b, double t, const DArray& x, double mu) {
        const Vector av = to_vec(a), xv = to_vec(x);
        const RowRef row = make_row(av);
        GTerm g;
        if (kind == "hyperplane") g = gterm::Hyperplane{row, b};
        else if (kind == "quadratic_residual") g = gterm::QuadraticResidual{row, b};
        else if (kind == "dist") g = gterm::Dist{row, b};
        else if (kind == "dist_sq") g = gterm::DistSq{row, b};
        else if (kind == "abs_residual") g = gterm::AbsResidual{row, b};
        else if (kind == "huber_residual") g = gterm::HuberResidual{row, b, mu};
        else throw std::invalid_argument("unknown prox kind " + kind);
        return to_array(prox_g(g, t, xv).point);
      },
      py::arg("kind"), py::arg("a"), py::arg("b"), py::arg("t"), py::arg("x"), py::arg("mu") = 0.0,
      "Row prox argmin_u t g(u) + 1/2 ||u - x||^2 for the named g.");

  m.def("alpha", &alpha, py::arg("rho"));
  m.def(
      "beta", [](double rho, Index m, const std::string& v) { return beta(rho, m, parse_variant(v)); }, py::arg("rho"),
      py::arg("m"), py::arg("variant") = "ripg1");

  m.def("shepp_logan", [](Index N) { return to_array(shepp_logan(N)); }, py::arg("n"));

  m.def(
      "make_problem",
      [](Index n, Index projections, Index rays, double eta, std::uint64_t seed) {
        TomoProblem P = make_sinogram(make_geometry(n, projections, rays), eta, seed);
        py::dict d;
        d["A"] = std::move(P.A);
        d["b"] = to_array(P.b);
        d["b_exact"] = to_array(P.b_exact);
        d["x_exact"] = to_array(P.x_exact);
        d["n"] = n;
        return d;
      },
      py::arg("n"), py::arg("projections"), py::arg("rays"), py::arg("eta"), py::arg("seed") = 0,
      "Parallel-beam problem with data simulated on a finer grid plus calibrated noise.");

  m.def(
      "solve",
      [](const CsrMatrix& A, const DArray& b, const std::string& method, double rho, double t0,
         const std::string& schedule, const std::string& control, std::uint64_t seed, const std::string& constraint,
         Index cycles, double mu, std::optional<DArray> x0, std::optional<DArray> reference) {
        const Vector bv = to_vec(b);
        const Vector start = x0 ? to_vec(*x0) : Vector(A.cols(), 0.0);
        const MethodSpec spec{parse_method(method), rho, parse_schedule(schedule, t0), parse_control(control, seed),
                              parse_constraint(constraint), mu};
        std::optional<Vector> ref;
        if (reference) ref = to_vec(*reference);
        std::optional<std::span<const double>> refspan;
        if (ref) refspan = std::span<const double>(*ref);
        IterationTrace t;
        {
          py::gil_scoped_release release;
          t = run_method(A, bv, spec, start, cycles, refspan);
        }
        return trace_dict(t);
      },
      py::arg("A"), py::arg("b"), py::arg("method") = "art", py::arg("rho") = 1.0, py::arg("t0") = 1.0,
      py::arg("schedule") = "constant", py::arg("control") = "cyclic", py::arg("seed") = 0,
      py::arg("constraint") = "none", py::arg("cycles") = 10, py::arg("mu") = 0.0, py::arg("x0") = py::none(),
      py::arg("reference") = py::none(),
      "Row-action method (art, damped-art, l1-art, huber-art, dist-art, dist-sq-art) for `cycles` sweeps.");

  m.def(
      "solve_tv_ls",
      [](const CsrMatrix& A, const DArray& b, Index n, double lambda, const std::string& constraint, Index max_iters,
         double tol) {
        const Vector bv = to_vec(b);
        const DiffOperator D = build_diff_operator(n, n);
        PDConfig cfg;
        cfg.max_iters = max_iters;
        cfg.tol = tol;
        PDResult r;
        {
          py::gil_scoped_release release;
          r = solve_tv_ls(A, bv, D, lambda, parse_constraint(constraint), cfg);
        }
        py::dict d;
        d["x"] = to_array(r.x);
        d["objective"] = to_array(r.objective);
        d["converged"] = r.converged;
        d["iterations"] = r.iterations;
        d["residual"] = r.residual;
        return d;
      },
      py::arg("A"), py::arg("b"), py::arg("n"), py::arg("lam"), py::arg("constraint") = "none",
      py::arg("max_iters") = 5000, py::arg("tol") = 1e-7,
      "Primal-dual reference for 1/2 ||Ax - b||^2 + lam TV(x) on an n x n image.");

  m.def(
      "tv_seminorm", [](const DArray& x, Index n) { return tv_seminorm(build_diff_operator(n, n), to_vec(x)); },
      py::arg("x"), py::arg("n"));

  m.def(
      "replay", [](const std::string& manifest, const std::string& out) { return cmd_replay(manifest, out); },
      py::arg("manifest"), py::arg("out"), "Re-run the command recorded in a manifest.json into `out`.");
}
