#include "rpx/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rpx {

SparseVector::SparseVector(std::vector<Index> indices, std::vector<double> values)
    : indices_(std::move(indices)), values_(std::move(values)) {
  if (indices_.size() != values_.size())
    throw DimensionError("SparseVector: indices and values differ in length");
  for (Index k = 1; k < indices_.size(); ++k)
    if (indices_[k] <= indices_[k - 1])
      throw std::invalid_argument("SparseVector: indices must be strictly increasing");
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
  std::vector<Index> idx;
  std::vector<double> val;
  for (Index j = 0; j < dense.size(); ++j) {
    if (dense[j] != 0.0) {
      idx.push_back(j);
      val.push_back(dense[j]);
    }
  }
  return SparseVector(std::move(idx), std::move(val));
}

CsrMatrix::CsrMatrix(Index nrows, Index ncols, std::vector<Index> row_offsets,
                     std::vector<Index> col_indices, std::vector<double> values)
    : nrows_(nrows),
      ncols_(ncols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != nrows_ + 1)
    throw DimensionError("CsrMatrix: row_offsets must have nrows+1 entries");
  if (row_offsets_.front() != 0 || row_offsets_.back() != values_.size() ||
      col_indices_.size() != values_.size())
    throw std::invalid_argument("CsrMatrix: inconsistent offsets/nnz");
  for (Index i = 0; i < nrows_; ++i) {
    if (row_offsets_[i + 1] < row_offsets_[i])
      throw std::invalid_argument("CsrMatrix: row_offsets must be nondecreasing");
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      if (col_indices_[k] >= ncols_)
        throw std::invalid_argument("CsrMatrix: column index out of range");
      if (values_[k] == 0.0) throw std::invalid_argument("CsrMatrix: explicit zero stored");
      if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
        throw std::invalid_argument("CsrMatrix: column indices must be strictly increasing");
    }
  }
}

CsrMatrix CsrMatrix::row_range(Index first, Index last) const {
  if (first > last || last > nrows_) throw DimensionError("CsrMatrix::row_range: bad range");
  const Index b = row_offsets_[first];
  const Index e = row_offsets_[last];
  std::vector<Index> offsets(last - first + 1);
  for (Index i = first; i <= last; ++i) offsets[i - first] = row_offsets_[i] - b;
  return CsrMatrix(last - first, ncols_, std::move(offsets),
                   std::vector<Index>(col_indices_.begin() + b, col_indices_.begin() + e),
                   std::vector<double>(values_.begin() + b, values_.begin() + e));
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nrows_),
                                            static_cast<Eigen::Index>(ncols_));
  for (Index i = 0; i < nrows_; ++i)
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_indices_[k])) = values_[k];
  return M;
}

BlockPartition::BlockPartition(std::vector<Index> starts) : starts_(std::move(starts)) {
  if (starts_.size() < 2 || starts_.front() != 0)
    throw std::invalid_argument("BlockPartition: need starts[0]==0 and at least one block");
  for (Index b = 1; b < starts_.size(); ++b)
    if (starts_[b] <= starts_[b - 1])
      throw std::invalid_argument("BlockPartition: blocks must be nonempty");
}

BlockPartition BlockPartition::uniform(Index nrows, Index p) {
  if (p == 0 || p > nrows) throw std::invalid_argument("BlockPartition::uniform: need 1 <= p <= nrows");
  std::vector<Index> starts(p + 1, 0);
  const Index base = nrows / p;
  const Index extra = nrows % p;
  for (Index b = 0; b < p; ++b) starts[b + 1] = starts[b] + base + (b < extra ? 1 : 0);
  return BlockPartition(std::move(starts));
}

BlockPartition BlockPartition::fixed_size(Index nrows, Index size) {
  if (size == 0 || nrows % size != 0)
    throw std::invalid_argument("BlockPartition::fixed_size: nrows must be a multiple of size");
  return uniform(nrows, nrows / size);
}

CsrMatrix csr_from_triplets(Index nrows, Index ncols, std::span<const Triplet> triplets) {
  std::vector<Triplet> t(triplets.begin(), triplets.end());
  for (const auto& e : t)
    if (e.row >= nrows || e.col >= ncols)
      throw std::out_of_range("csr_from_triplets: index out of range");
  std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return a.value < b.value;
  });

  std::vector<Index> offsets(nrows + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(t.size());
  vals.reserve(t.size());
  for (Index k = 0; k < t.size();) {
    Index j = k;
    double s = 0.0;
    while (j < t.size() && t[j].row == t[k].row && t[j].col == t[k].col) s += t[j++].value;
    if (s != 0.0) {
      cols.push_back(t[k].col);
      vals.push_back(s);
      ++offsets[t[k].row + 1];
    }
    k = j;
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return CsrMatrix(nrows, ncols, std::move(offsets), std::move(cols), std::move(vals));
}

void spmv_into(const CsrMatrix& A, std::span<const double> x, std::span<double> out) {
  if (x.size() != A.cols() || out.size() != A.rows())
    throw DimensionError("spmv: dimension mismatch");
  for (Index i = 0; i < A.rows(); ++i) out[i] = A.row(i).dot(x);
}

void spmv_t_into(const CsrMatrix& A, std::span<const double> y, std::span<double> out) {
  if (y.size() != A.rows() || out.size() != A.cols())
    throw DimensionError("spmv_t: dimension mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (Index i = 0; i < A.rows(); ++i) {
    const RowView r = A.row(i);
    const double yi = y[i];
    for (Index k = 0; k < r.size(); ++k) out[r.indices[k]] += r.values[k] * yi;
  }
}

Vector spmv(const CsrMatrix& A, std::span<const double> x) {
  Vector out(A.rows());
  spmv_into(A, x, out);
  return out;
}

Vector spmv_t(const CsrMatrix& A, std::span<const double> y) {
  Vector out(A.cols());
  spmv_t_into(A, y, out);
  return out;
}

Vector row_squared_norms(const CsrMatrix& A) {
  Vector out(A.rows());
  for (Index i = 0; i < A.rows(); ++i) out[i] = A.row(i).squared_norm();
  return out;
}

Vector row_norms(const CsrMatrix& A) {
  Vector out = row_squared_norms(A);
  for (double& v : out) v = std::sqrt(v);
  return out;
}

Vector column_norms(const CsrMatrix& A, double p_norm) {
  Vector acc(A.cols(), 0.0);
  const bool inf = std::isinf(p_norm);
  for (Index i = 0; i < A.rows(); ++i) {
    const RowView r = A.row(i);
    for (Index k = 0; k < r.size(); ++k) {
      const double a = std::abs(r.values[k]);
      double& c = acc[r.indices[k]];
      if (inf)
        c = std::max(c, a);
      else if (p_norm == 1.0)
        c += a;
      else if (p_norm == 2.0)
        c += a * a;
      else
        c += std::pow(a, p_norm);
    }
  }
  if (!inf && p_norm != 1.0) {
    for (double& c : acc) c = p_norm == 2.0 ? std::sqrt(c) : std::pow(c, 1.0 / p_norm);
  }
  return acc;
}

Eigen::MatrixXd gram(const CsrMatrix& block) {
  const auto m = static_cast<Eigen::Index>(block.rows());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
  Vector scatter(block.cols(), 0.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const RowView ri = block.row(static_cast<Index>(i));
    for (Index k = 0; k < ri.size(); ++k) scatter[ri.indices[k]] = ri.values[k];
    G(i, i) = ri.squared_norm();
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = block.row(static_cast<Index>(j)).dot(scatter);
      G(i, j) = v;
      G(j, i) = v;
    }
    for (Index k = 0; k < ri.size(); ++k) scatter[ri.indices[k]] = 0.0;
  }
  return G;
}

bool is_tridiagonal(const Eigen::MatrixXd& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      if ((i > j + 1 || j > i + 1) && M(i, j) != 0.0) return false;
  return true;
}

Eigen::VectorXd solve_tridiagonal_spd(std::span<const double> diag, std::span<const double> off,
                                      const Eigen::VectorXd& rhs) {
  const Index n = diag.size();
  if (static_cast<Index>(rhs.size()) != n || (n > 0 && off.size() + 1 != n))
    throw DimensionError("solve_tridiagonal_spd: dimension mismatch");
  if (n == 0) return Eigen::VectorXd();
  double scale = 0.0;
  for (double d : diag) scale = std::max(scale, std::abs(d));
  const double floor = 1e-14 * scale;

  // LDL^T: d[i] pivots, l[i] subdiagonal multipliers.
  std::vector<double> d(n), l(n, 0.0);
  d[0] = diag[0];
  if (!(d[0] > floor)) throw NotPositiveDefinite("solve_tridiagonal_spd: nonpositive pivot");
  for (Index i = 1; i < n; ++i) {
    l[i] = off[i - 1] / d[i - 1];
    d[i] = diag[i] - l[i] * off[i - 1];
    if (!(d[i] > floor)) throw NotPositiveDefinite("solve_tridiagonal_spd: nonpositive pivot");
  }
  Eigen::VectorXd y = rhs;
  for (Index i = 1; i < n; ++i) y[static_cast<Eigen::Index>(i)] -= l[i] * y[static_cast<Eigen::Index>(i - 1)];
  for (Index i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] /= d[i];
  for (Index i = n - 1; i-- > 0;)
    y[static_cast<Eigen::Index>(i)] -= l[i + 1] * y[static_cast<Eigen::Index>(i + 1)];
  return y;
}

Eigen::VectorXd solve_small_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs, Index cap) {
  const Eigen::Index n = M.rows();
  if (M.cols() != n || rhs.size() != n) throw DimensionError("solve_small_spd: dimension mismatch");
  if (static_cast<Index>(n) > cap) throw std::invalid_argument("solve_small_spd: block exceeds size cap");
  if (n == 0) return Eigen::VectorXd();

  if (is_tridiagonal(M)) {
    std::vector<double> diag(static_cast<Index>(n)), off(static_cast<Index>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i) diag[static_cast<Index>(i)] = M(i, i);
    for (Eigen::Index i = 0; i + 1 < n; ++i) off[static_cast<Index>(i)] = M(i + 1, i);
    return solve_tridiagonal_spd(diag, off, rhs);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("solve_small_spd: matrix is not SPD");
  const double max_diag = M.diagonal().cwiseAbs().maxCoeff();
  const Eigen::VectorXd L_diag = llt.matrixLLT().diagonal();
  if (L_diag.cwiseAbs2().minCoeff() <= 1e-14 * max_diag)
    throw NotPositiveDefinite("solve_small_spd: matrix is numerically singular");
  return llt.solve(rhs);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: dimension mismatch");
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace {

// Scaled 2-norm of (a - b), used when the plain sum of squares overflows.
double scaled_distance(std::span<const double> a, std::span<const double> b) {
  double scale = 0.0;
  for (Index i = 0; i < a.size(); ++i) scale = std::max(scale, std::abs(a[i] - (b.empty() ? 0.0 : b[i])));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double d = (a[i] - (b.empty() ? 0.0 : b[i])) / scale;
    s += d * d;
  }
  return scale * std::sqrt(s);
}

}  // namespace

double norm2(std::span<const double> a) {
  const double s = std::sqrt(dot(a, a));
  return std::isinf(s) ? scaled_distance(a, {}) : s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("distance: dimension mismatch");
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::isinf(s) ? scaled_distance(a, b) : std::sqrt(s);
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace rpx
