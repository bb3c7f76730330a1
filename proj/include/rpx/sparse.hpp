#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rpx {

using Index = std::size_t;
using Vector = std::vector<double>;

/// Largest block (in rows) accepted by the dense block solvers.
inline constexpr Index kDefaultBlockCap = 2048;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

/// Read-only alias of one sparse row: sorted column indices and their values.
struct RowView {
  std::span<const Index> indices;
  std::span<const double> values;

  Index size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }

  /// Sparse-dense inner product, summed in ascending column order.
  double dot(std::span<const double> x) const {
    double s = 0.0;
    for (Index k = 0; k < indices.size(); ++k) s += values[k] * x[indices[k]];
    return s;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }
};

/// Owning sparse vector, mostly a convenience for building single rows.
class SparseVector {
 public:
  SparseVector() = default;
  SparseVector(std::vector<Index> indices, std::vector<double> values);

  /// Keeps every nonzero entry of `dense`.
  static SparseVector from_dense(std::span<const double> dense);

  RowView view() const { return {indices_, values_}; }
  const std::vector<Index>& indices() const { return indices_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<Index> indices_;
  std::vector<double> values_;
};

/// Compressed sparse row matrix in canonical form: column indices strictly
/// increasing within each row and no stored zeros.
class CsrMatrix {
 public:
  CsrMatrix() : row_offsets_{0} {}

  /// Adopts the given arrays after validating every CSR invariant.
  CsrMatrix(Index nrows, Index ncols, std::vector<Index> row_offsets,
            std::vector<Index> col_indices, std::vector<double> values);

  Index rows() const { return nrows_; }
  Index cols() const { return ncols_; }
  Index nnz() const { return values_.size(); }

  RowView row(Index i) const {
    const Index b = row_offsets_[i];
    const Index e = row_offsets_[i + 1];
    return {std::span<const Index>(col_indices_).subspan(b, e - b),
            std::span<const double>(values_).subspan(b, e - b)};
  }

  /// Copy of rows [first, last) as a standalone matrix with the same columns.
  CsrMatrix row_range(Index first, Index last) const;

  Eigen::MatrixXd to_dense() const;

  const std::vector<Index>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

 private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<Index> row_offsets_;
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

/// Partition of the rows of a matrix into contiguous nonempty blocks.
class BlockPartition {
 public:
  BlockPartition() = default;
  /// `starts` holds p+1 boundaries: starts[0] == 0, starts[p] == nrows.
  explicit BlockPartition(std::vector<Index> starts);

  /// p blocks of (nearly) equal size; the first nrows % p blocks get one extra row.
  static BlockPartition uniform(Index nrows, Index p);
  /// Consecutive blocks of exactly `size` rows (nrows must be a multiple).
  static BlockPartition fixed_size(Index nrows, Index size);

  Index count() const { return starts_.empty() ? 0 : starts_.size() - 1; }
  Index begin(Index b) const { return starts_[b]; }
  Index end(Index b) const { return starts_[b + 1]; }
  Index size(Index b) const { return end(b) - begin(b); }
  Index total_rows() const { return starts_.empty() ? 0 : starts_.back(); }
  const std::vector<Index>& starts() const { return starts_; }

 private:
  std::vector<Index> starts_;
};

/// Canonical CSR from unordered triplets: duplicates summed (in ascending
/// value order, so the result does not depend on input order), zeros dropped.
CsrMatrix csr_from_triplets(Index nrows, Index ncols, std::span<const Triplet> triplets);

Vector spmv(const CsrMatrix& A, std::span<const double> x);
Vector spmv_t(const CsrMatrix& A, std::span<const double> y);
void spmv_into(const CsrMatrix& A, std::span<const double> x, std::span<double> out);
void spmv_t_into(const CsrMatrix& A, std::span<const double> y, std::span<double> out);

Vector row_norms(const CsrMatrix& A);
Vector row_squared_norms(const CsrMatrix& A);

/// Euclidean norm of each column.
Vector column_norms(const CsrMatrix& A, double p_norm = 2.0);

/// Dense Gram matrix B*B^T of a (small) sparse block.
Eigen::MatrixXd gram(const CsrMatrix& block);

bool is_tridiagonal(const Eigen::MatrixXd& M);

/// Solves M y = rhs for small symmetric positive definite M. Tridiagonal
/// matrices take an O(n) LDL^T path; everything else a dense Cholesky.
Eigen::VectorXd solve_small_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& rhs,
                                Index cap = kDefaultBlockCap);

/// LDL^T solve of a symmetric tridiagonal system given its diagonal and
/// first off-diagonal.
Eigen::VectorXd solve_tridiagonal_spd(std::span<const double> diag,
                                      std::span<const double> off,
                                      const Eigen::VectorXd& rhs);

// Dense helpers shared by the solvers.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double distance(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> a);

}  // namespace rpx
