#include "rpx/tomo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace rpx {
namespace {

struct Ellipse {
  double value, a, b, x0, y0, phi_deg;
};

constexpr std::array<Ellipse, 10> kSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
    {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
    {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
}};

constexpr double kDirEps = 1e-14;

// Line parameters where the ray crosses the N+1 grid lines of one axis.
void crossings(double origin, double dir, double lo, double w, Index N, std::vector<double>& out) {
  if (std::abs(dir) < kDirEps) return;
  for (Index k = 0; k <= N; ++k) out.push_back((lo + static_cast<double>(k) * w - origin) / dir);
}

void check_geometry(const Geometry& g) {
  if (g.N == 0 || g.p == 0 || g.r == 0) throw std::invalid_argument("geometry: N, p and r must be >= 1");
  if (!(g.pixel_size > 0.0)) throw std::invalid_argument("geometry: pixel size must be positive");
  if (g.angles_deg.size() != g.p) throw std::invalid_argument("geometry: need one angle per projection");
}

template <class Visit>
void for_each_ray(const Geometry& g, Visit visit) {
  std::vector<RaySegment> seg;
  for (Index q = 0; q < g.p; ++q) {
    const double th = g.angles_deg[q] * std::numbers::pi / 180.0;
    for (Index k = 0; k < g.r; ++k) {
      trace_ray(g.N, g.pixel_size, g.ray_offset(k), th, seg);
      visit(q, k, seg);
    }
  }
}

}  // namespace

double Geometry::ray_offset(Index k) const {
  if (r == 1) return 0.0;
  return -0.5 * detector_width + detector_width * static_cast<double>(k) / static_cast<double>(r - 1);
}

Geometry make_geometry(Index N, Index p, Index r, double pixel_size) {
  Geometry g;
  g.N = N;
  g.p = p;
  g.r = r;
  g.pixel_size = pixel_size;
  g.detector_width = std::sqrt(2.0) * static_cast<double>(N) * pixel_size;
  for (Index q = 0; q < p; ++q) g.angles_deg.push_back(180.0 * static_cast<double>(q) / static_cast<double>(p));
  check_geometry(g);
  return g;
}

void trace_ray(Index N, double w, double s, double theta, std::vector<RaySegment>& out) {
  out.clear();
  const double half = 0.5 * static_cast<double>(N) * w;
  const double ox = s * std::cos(theta), oy = s * std::sin(theta);
  const double dx = -std::sin(theta), dy = std::cos(theta);

  // Parameter interval inside the square.
  double lmin = -std::numeric_limits<double>::infinity(), lmax = std::numeric_limits<double>::infinity();
  for (auto [o, d] : {std::pair{ox, dx}, std::pair{oy, dy}}) {
    if (std::abs(d) < kDirEps) {
      if (o < -half || o > half) return;
      continue;
    }
    const double l1 = (-half - o) / d, l2 = (half - o) / d;
    lmin = std::max(lmin, std::min(l1, l2));
    lmax = std::min(lmax, std::max(l1, l2));
  }
  if (!(lmax > lmin)) return;

  std::vector<double> ts{lmin, lmax};
  crossings(ox, dx, -half, w, N, ts);
  crossings(oy, dy, -half, w, N, ts);
  std::sort(ts.begin(), ts.end());

  const double min_len = 1e-12 * w;
  double prev = lmin;
  for (double l : ts) {
    if (l <= prev) continue;
    if (l > lmax) l = lmax;
    const double len = l - prev;
    if (len > min_len) {
      const double mid = 0.5 * (prev + l);
      const double x = ox + mid * dx, y = oy + mid * dy;
      const auto col = static_cast<long long>(std::floor((x + half) / w));
      const auto row = static_cast<long long>(std::floor((half - y) / w));
      const auto n = static_cast<long long>(N);
      if (col >= 0 && col < n && row >= 0 && row < n)
        out.push_back({static_cast<Index>(row) + N * static_cast<Index>(col), len});
    }
    prev = l;
    if (prev >= lmax) break;
  }
}

Vector shepp_logan(Index N) {
  if (N < 8) throw std::invalid_argument("shepp_logan: N must be >= 8");
  Vector img(N * N, 0.0);
  const double h = 2.0 / static_cast<double>(N);
  for (Index j = 0; j < N; ++j) {
    const double x = -1.0 + (static_cast<double>(j) + 0.5) * h;
    for (Index i = 0; i < N; ++i) {
      const double y = 1.0 - (static_cast<double>(i) + 0.5) * h;
      double v = 0.0;
      for (const Ellipse& e : kSheppLogan) {
        const double phi = e.phi_deg * std::numbers::pi / 180.0;
        const double c = std::cos(phi), sn = std::sin(phi);
        const double u = (x - e.x0) * c + (y - e.y0) * sn;
        const double t = -(x - e.x0) * sn + (y - e.y0) * c;
        if (u * u / (e.a * e.a) + t * t / (e.b * e.b) <= 1.0) v += e.value;
      }
      img[i + N * j] = std::max(v, 0.0);
    }
  }
  return img;
}

CsrMatrix build_projector(const Geometry& g) {
  check_geometry(g);
  std::vector<Index> offsets{0}, cols;
  Vector vals;
  std::vector<std::pair<Index, double>> row;
  for_each_ray(g,
               [&](Index, Index, const std::vector<RaySegment>& seg) {
                 row.clear();
                 for (const RaySegment& s : seg) row.emplace_back(s.pixel, s.length);
                 std::sort(row.begin(), row.end());
                 for (Index k = 0; k < row.size(); ++k) {
                   // A ray can cross the same pixel twice only through a shared corner.
                   if (cols.size() > offsets.back() && cols.back() == row[k].first) {
                     vals.back() += row[k].second;
                   } else {
                     cols.push_back(row[k].first);
                     vals.push_back(row[k].second);
                   }
                 }
                 offsets.push_back(cols.size());
               });
  return CsrMatrix(g.rays(), g.pixels(), std::move(offsets), std::move(cols), std::move(vals));
}

Vector forward_project(const Geometry& g, std::span<const double> image) {
  check_geometry(g);
  if (image.size() != g.pixels()) throw DimensionError("forward_project: image size mismatch");
  Vector out(g.rays(), 0.0);
  for_each_ray(g,
               [&](Index q, Index k, const std::vector<RaySegment>& seg) {
                 double s = 0.0;
                 for (const RaySegment& e : seg) s += e.length * image[e.pixel];
                 out[q * g.r + k] = s;
               });
  return out;
}

TomoProblem make_sinogram(const Geometry& g, double eta, std::uint64_t seed) {
  check_geometry(g);
  if (!(eta >= 0.0)) throw std::invalid_argument("make_sinogram: eta must be nonnegative");
  TomoProblem P;
  P.geometry = g;
  P.eta = eta;
  P.seed = seed;
  P.A = build_projector(g);
  P.x_exact = shepp_logan(g.N);

  const auto Nf = static_cast<Index>(std::lround(std::sqrt(3.0) * static_cast<double>(g.N)));
  const auto rf = static_cast<Index>(std::lround(std::sqrt(2.0) * static_cast<double>(g.r)));
  Geometry fine = g;
  fine.N = Nf;
  fine.r = rf;
  fine.pixel_size = g.pixel_size * static_cast<double>(g.N) / static_cast<double>(Nf);
  const Vector bf = forward_project(fine, shepp_logan(Nf));

  P.b_exact.assign(g.rays(), 0.0);
  for (Index q = 0; q < g.p; ++q) {
    for (Index k = 0; k < g.r; ++k) {
      // Position of coarse ray k on the fine detector grid.
      const double pos = g.r == 1 ? 0.5 * static_cast<double>(rf - 1)
                                  : static_cast<double>(k) * static_cast<double>(rf - 1) /
                                        static_cast<double>(g.r - 1);
      const auto lo = std::min(static_cast<Index>(std::floor(pos)), rf - 1);
      const Index hi = std::min(lo + 1, rf - 1);
      const double frac = pos - static_cast<double>(lo);
      P.b_exact[q * g.r + k] = (1.0 - frac) * bf[q * rf + lo] + frac * bf[q * rf + hi];
    }
  }

  P.b = P.b_exact;
  if (eta > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector e(g.rays());
    for (double& v : e) v = gauss(rng);
    const double scale = eta * norm2(P.b_exact) / norm2(e);
    for (Index i = 0; i < e.size(); ++i) P.b[i] += scale * e[i];
  }
  return P;
}

BlockPartition projection_blocks(const Geometry& g) { return BlockPartition::fixed_size(g.rays(), g.r); }

}  // namespace rpx
