#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "mpcc/point_cloud.hpp"

namespace mpcc::zorder {

inline constexpr int kDefaultBits = 10;
inline constexpr double kExtentEps = 1e-9;

/// Shared quantization frame: grid = floor((p - c_min) * scale).
struct GridParams {
  Point3 c_min{0.0, 0.0, 0.0};
  double scale = 1.0;
  int bits = kDefaultBits;

  std::uint32_t max_cell() const { return (1u << bits) - 1u; }
};

using GridCoord = std::array<std::uint32_t, 3>;

struct SerializedCloud {
  std::vector<std::size_t> order;     // indices into the cloud, Z-sorted
  std::vector<std::uint64_t> codes;   // per original point
  std::vector<GridCoord> grid;        // per original point
};

/// G patches of K points each, laid out as contiguous Z-order slices.
struct PatchSet {
  std::size_t G = 0;
  std::size_t K = 0;
  std::vector<Point3> points;          // G*K, patch-major
  std::vector<Point3> centers;         // G
  std::vector<std::size_t> source;     // G*K original point indices
  std::vector<std::uint64_t> codes;    // G*K Morton codes

  const Point3& at(std::size_t g, std::size_t k) const { return points[g * K + k]; }
};

void validate_grid(const GridParams& gp);

/// Joint minimum corner and isotropic scale covering both clouds.
GridParams joint_grid(const PointCloud& a, const PointCloud& b, int bits = kDefaultBits);

/// Grid frame of a single cloud, used for independent serialization and at
/// inference time.
GridParams own_grid(const PointCloud& c, int bits = kDefaultBits);

/// Interleaves coordinate bits: x bit i -> code bit 3i, y -> 3i+1, z -> 3i+2.
std::uint64_t morton_encode(const GridCoord& g, int bits);
GridCoord morton_decode(std::uint64_t code, int bits);

GridCoord quantize(const Point3& p, const GridParams& gp);

SerializedCloud serialize(const PointCloud& c, const GridParams& gp);

/// Positions of the G*K sequence entries in the Z-sorted order of n points:
/// floor(i * n / (G*K)). Subsamples by stride when n > G*K and duplicates
/// neighbours round-robin when n < G*K; Z order is preserved either way.
std::vector<std::size_t> resample_positions(std::size_t n, std::size_t total);

PatchSet partition(const SerializedCloud& s, const PointCloud& c, std::size_t G, std::size_t K);

struct CdpsResult {
  PatchSet a;
  PatchSet b;
  GridParams grid;
};

/// Cross-domain patch scanning: both clouds serialized in one shared frame.
CdpsResult cdps(const PointCloud& a, const PointCloud& b, std::size_t G, std::size_t K,
                int bits = kDefaultBits);

/// Baseline scanning: each cloud serialized in its own frame.
CdpsResult independent_scan(const PointCloud& a, const PointCloud& b, std::size_t G, std::size_t K,
                            int bits = kDefaultBits);

/// Mean distance between same-index patch centers of two patch sets.
double mean_center_distance(const PatchSet& a, const PatchSet& b);

}  // namespace mpcc::zorder
