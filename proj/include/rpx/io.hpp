#pragma once

#include <span>
#include <string>
#include <utility>

#include "rpx/ripg.hpp"
#include "rpx/sparse.hpp"

namespace rpx {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// "RPX1", u64 nrows, ncols, nnz, u64 row_offsets[nrows+1], u64 cols[nnz], f64 values[nnz]; little-endian.
void write_matrix(const std::string& path, const CsrMatrix& A);
CsrMatrix read_matrix(const std::string& path);

/// "RPV1", u64 length, f64 data[length]; little-endian.
void write_vector(const std::string& path, std::span<const double> v);
Vector read_vector(const std::string& path);

/// Binary P5 graymap of a column-major N x N image, scaled linearly from
/// [min, max] to [0, 255]. Returns (min, max).
std::pair<double, double> write_pgm(const std::string& path, std::span<const double> image, Index N);

/// `cycle,relative_error,objective,t_k` with 17 significant digits.
void write_history_csv(const std::string& path, const IterationTrace& trace);

std::string format_double(double v);

/// Whole file as bytes.
std::string read_file(const std::string& path);

}  // namespace rpx
