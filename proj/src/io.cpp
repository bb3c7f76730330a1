#include "rpx/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rpx {
namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int k = 0; k < 8; ++k) buf[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
  os.write(buf, 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& is, const std::string& path) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw FormatError(path + ": truncated file");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(buf[k]) << (8 * k);
  return v;
}

double get_f64(std::istream& is, const std::string& path) { return std::bit_cast<double>(get_u64(is, path)); }

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return is;
}

void expect_magic(std::istream& is, const char* magic, const std::string& path) {
  char buf[4];
  if (!is.read(buf, 4) || std::string(buf, 4) != magic)
    throw FormatError(path + ": bad magic, expected " + magic);
}

void finish(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_matrix(const std::string& path, const CsrMatrix& A) {
  auto os = open_out(path);
  os.write("RPX1", 4);
  put_u64(os, A.rows());
  put_u64(os, A.cols());
  put_u64(os, A.nnz());
  for (Index v : A.row_offsets()) put_u64(os, v);
  for (Index v : A.col_indices()) put_u64(os, v);
  for (double v : A.values()) put_f64(os, v);
  finish(os, path);
}

CsrMatrix read_matrix(const std::string& path) {
  auto is = open_in(path);
  expect_magic(is, "RPX1", path);
  const Index nrows = get_u64(is, path), ncols = get_u64(is, path), nnz = get_u64(is, path);
  std::vector<Index> offsets(nrows + 1), cols(nnz);
  Vector vals(nnz);
  for (Index& v : offsets) v = get_u64(is, path);
  for (Index& v : cols) v = get_u64(is, path);
  for (double& v : vals) v = get_f64(is, path);
  try {
    return CsrMatrix(nrows, ncols, std::move(offsets), std::move(cols), std::move(vals));
  } catch (const std::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_vector(const std::string& path, std::span<const double> v) {
  auto os = open_out(path);
  os.write("RPV1", 4);
  put_u64(os, v.size());
  for (double x : v) put_f64(os, x);
  finish(os, path);
}

Vector read_vector(const std::string& path) {
  auto is = open_in(path);
  expect_magic(is, "RPV1", path);
  Vector v(get_u64(is, path));
  for (double& x : v) x = get_f64(is, path);
  return v;
}

std::pair<double, double> write_pgm(const std::string& path, std::span<const double> image, Index N) {
  if (image.size() != N * N) throw DimensionError("write_pgm: image is not N x N");
  double lo = 0.0, hi = 0.0;
  if (!image.empty()) {
    const auto [mn, mx] = std::minmax_element(image.begin(), image.end());
    lo = *mn;
    hi = *mx;
  }
  auto os = open_out(path);
  os << "P5\n" << N << ' ' << N << "\n255\n";
  const double range = hi - lo;
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j) {
      const double v = range > 0.0 ? (image[i + N * j] - lo) / range : 0.0;
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    }
  finish(os, path);
  return {lo, hi};
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_history_csv(const std::string& path, const IterationTrace& trace) {
  auto os = open_out(path);
  os << "cycle,relative_error,objective,t_k\n";
  for (Index c = 0; c < trace.objective.size(); ++c) {
    const double rel = c < trace.relative_error.size() ? trace.relative_error[c] : std::nan("");
    os << c << ',' << format_double(rel) << ',' << format_double(trace.objective[c]) << ','
       << format_double(trace.step_sizes[c]) << '\n';
  }
  finish(os, path);
}

std::string read_file(const std::string& path) {
  auto is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace rpx
