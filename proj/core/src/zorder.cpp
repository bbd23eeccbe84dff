#include "mpcc/zorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mpcc/error.hpp"

namespace mpcc::zorder {

namespace {

// Spreads the low 21 bits of v so bit i lands at bit 3i.
std::uint64_t spread3(std::uint64_t v) {
  v &= 0x1FFFFFULL;
  v = (v | (v << 32)) & 0x1F00000000FFFFULL;
  v = (v | (v << 16)) & 0x1F0000FF0000FFULL;
  v = (v | (v << 8)) & 0x100F00F00F00F00FULL;
  v = (v | (v << 4)) & 0x10C30C30C30C30C3ULL;
  v = (v | (v << 2)) & 0x1249249249249249ULL;
  return v;
}

std::uint64_t compact3(std::uint64_t v) {
  v &= 0x1249249249249249ULL;
  v = (v ^ (v >> 2)) & 0x10C30C30C30C30C3ULL;
  v = (v ^ (v >> 4)) & 0x100F00F00F00F00FULL;
  v = (v ^ (v >> 8)) & 0x1F0000FF0000FFULL;
  v = (v ^ (v >> 16)) & 0x1F00000000FFFFULL;
  v = (v ^ (v >> 32)) & 0x1FFFFFULL;
  return v;
}

GridParams grid_from_bounds(const Point3& lo, const Point3& hi, int bits) {
  GridParams gp;
  gp.bits = bits;
  validate_grid(gp);
  gp.c_min = lo;
  double extent = 0.0;
  for (int a = 0; a < 3; ++a) extent = std::max(extent, hi[a] - lo[a]);
  extent = std::max(extent, kExtentEps);
  gp.scale = static_cast<double>(gp.max_cell()) / extent;
  return gp;
}

void accumulate_bounds(const PointCloud& c, Point3& lo, Point3& hi) {
  for (const auto& p : c.points) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
}

}  // namespace

void validate_grid(const GridParams& gp) {
  if (gp.bits < 1 || gp.bits > 21) {
    throw ConfigError("grid bits must lie in [1, 21], got " + std::to_string(gp.bits));
  }
}

GridParams joint_grid(const PointCloud& a, const PointCloud& b, int bits) {
  validate_cloud(a, "joint_grid");
  validate_cloud(b, "joint_grid");
  constexpr double inf = std::numeric_limits<double>::infinity();
  Point3 lo{inf, inf, inf};
  Point3 hi{-inf, -inf, -inf};
  accumulate_bounds(a, lo, hi);
  accumulate_bounds(b, lo, hi);
  return grid_from_bounds(lo, hi, bits);
}

GridParams own_grid(const PointCloud& c, int bits) { return joint_grid(c, c, bits); }

std::uint64_t morton_encode(const GridCoord& g, int bits) {
  if (bits < 1 || bits > 21) throw DomainError("morton_encode: bits must lie in [1, 21]");
  const std::uint64_t limit = 1ULL << bits;
  for (auto v : g) {
    if (v >= limit) {
      throw DomainError("morton_encode: coordinate " + std::to_string(v) + " exceeds " +
                        std::to_string(bits) + "-bit grid");
    }
  }
  return spread3(g[0]) | (spread3(g[1]) << 1) | (spread3(g[2]) << 2);
}

GridCoord morton_decode(std::uint64_t code, int bits) {
  if (bits < 1 || bits > 21) throw DomainError("morton_decode: bits must lie in [1, 21]");
  return {static_cast<std::uint32_t>(compact3(code)), static_cast<std::uint32_t>(compact3(code >> 1)),
          static_cast<std::uint32_t>(compact3(code >> 2))};
}

GridCoord quantize(const Point3& p, const GridParams& gp) {
  GridCoord g{};
  const double top = static_cast<double>(gp.max_cell());
  for (int a = 0; a < 3; ++a) {
    const double v = std::floor((p[a] - gp.c_min[a]) * gp.scale);
    g[a] = static_cast<std::uint32_t>(std::clamp(v, 0.0, top));
  }
  return g;
}

SerializedCloud serialize(const PointCloud& c, const GridParams& gp) {
  validate_grid(gp);
  SerializedCloud s;
  const std::size_t n = c.size();
  s.grid.resize(n);
  s.codes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.grid[i] = quantize(c[i], gp);
    s.codes[i] = morton_encode(s.grid[i], gp.bits);
  }
  s.order.resize(n);
  std::iota(s.order.begin(), s.order.end(), std::size_t{0});
  std::stable_sort(s.order.begin(), s.order.end(),
                   [&](std::size_t x, std::size_t y) { return s.codes[x] < s.codes[y]; });
  return s;
}

std::vector<std::size_t> resample_positions(std::size_t n, std::size_t total) {
  std::vector<std::size_t> pos(total);
  for (std::size_t i = 0; i < total; ++i) {
    pos[i] = static_cast<std::size_t>((static_cast<unsigned __int128>(i) * n) / total);
  }
  return pos;
}

PatchSet partition(const SerializedCloud& s, const PointCloud& c, std::size_t G, std::size_t K) {
  if (G == 0 || K == 0) throw ConfigError("partition: G and K must be positive");
  if (s.order.size() != c.size() || c.empty()) {
    throw DimensionError("partition: serialized order does not match cloud");
  }
  const std::size_t total = G * K;
  const auto pos = resample_positions(c.size(), total);
  PatchSet ps;
  ps.G = G;
  ps.K = K;
  ps.points.resize(total);
  ps.source.resize(total);
  ps.codes.resize(total);
  ps.centers.assign(G, Point3{0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t idx = s.order[pos[i]];
    ps.points[i] = c[idx];
    ps.source[i] = idx;
    ps.codes[i] = s.codes[idx];
  }
  for (std::size_t g = 0; g < G; ++g) {
    Point3 acc{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < K; ++k) {
      for (int a = 0; a < 3; ++a) acc[a] += ps.points[g * K + k][a];
    }
    for (int a = 0; a < 3; ++a) ps.centers[g][a] = acc[a] / static_cast<double>(K);
  }
  return ps;
}

CdpsResult cdps(const PointCloud& a, const PointCloud& b, std::size_t G, std::size_t K, int bits) {
  const GridParams gp = joint_grid(a, b, bits);
  return {partition(serialize(a, gp), a, G, K), partition(serialize(b, gp), b, G, K), gp};
}

CdpsResult independent_scan(const PointCloud& a, const PointCloud& b, std::size_t G, std::size_t K,
                            int bits) {
  const GridParams ga = own_grid(a, bits);
  const GridParams gb = own_grid(b, bits);
  return {partition(serialize(a, ga), a, G, K), partition(serialize(b, gb), b, G, K), ga};
}

double mean_center_distance(const PatchSet& a, const PatchSet& b) {
  if (a.G != b.G || a.G == 0) throw DimensionError("mean_center_distance: patch counts differ");
  double total = 0.0;
  for (std::size_t g = 0; g < a.G; ++g) total += std::sqrt(squared_distance(a.centers[g], b.centers[g]));
  return total / static_cast<double>(a.G);
}

}  // namespace mpcc::zorder
