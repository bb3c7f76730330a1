#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rpx/sparse.hpp"

namespace rpx {

/// Parallel-beam geometry on an N x N pixel grid centred at the origin.
/// Pixel (i, j) (row i from the top, column j from the left) has index
/// i + N j. Projection q uses direction angle angles_deg[q]; its r rays are
/// equally spaced across a detector of width detector_width.
struct Geometry {
  Index N = 0;
  Index p = 0;
  Index r = 0;
  double pixel_size = 1.0;
  double detector_width = 0.0;
  std::vector<double> angles_deg;

  Index rays() const { return p * r; }
  Index pixels() const { return N * N; }
  /// Signed detector offset of ray k within a projection.
  double ray_offset(Index k) const;
};

/// Angles q * 180/p degrees and a detector spanning the image diagonal.
Geometry make_geometry(Index N, Index p, Index r, double pixel_size = 1.0);

struct RaySegment {
  Index pixel = 0;
  double length = 0.0;
};

/// Exact intersection lengths of the line s (cos th, sin th) + l (-sin th, cos th)
/// with the pixels of an N x N grid of the given pixel size, in order along
/// the line. Appends to `out` (which is cleared first).
void trace_ray(Index N, double pixel_size, double s, double theta_rad, std::vector<RaySegment>& out);

/// Modified Shepp-Logan phantom sampled at pixel centres of [-1, 1]^2,
/// column-major, clipped at 0.
Vector shepp_logan(Index N);

/// (p r) x N^2 matrix of ray/pixel intersection lengths; row q*r + k is ray k
/// of projection q.
CsrMatrix build_projector(const Geometry& g);

/// A x without storing A.
Vector forward_project(const Geometry& g, std::span<const double> image);

struct TomoProblem {
  Geometry geometry;
  CsrMatrix A;
  Vector x_exact;
  Vector b_exact;
  Vector b;
  double eta = 0.0;
  std::uint64_t seed = 0;
};

/// Projection data simulated on a finer grid (round(sqrt(3) N) pixels and
/// round(sqrt(2) r) rays over the same extents), linearly interpolated to the
/// r detector positions of each projection, plus Gaussian noise scaled so
/// that ||b - b_exact|| = eta ||b_exact||.
TomoProblem make_sinogram(const Geometry& g, double eta, std::uint64_t seed);

/// Rows of the block of projection q, one block per angle.
BlockPartition projection_blocks(const Geometry& g);

}  // namespace rpx
