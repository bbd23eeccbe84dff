#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "mpcc/tensor.hpp"

namespace mpcc {

using Point3 = std::array<double, 3>;

struct PointCloud {
  std::vector<Point3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point3& operator[](std::size_t i) const { return points[i]; }

  /// [N, 3] constant tensor.
  Tensor to_tensor() const;
  static PointCloud from_tensor(const Tensor& t);

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

/// Throws DomainError when the cloud is empty or holds non-finite values.
void validate_cloud(const PointCloud& cloud, const char* what);

/// ASCII `x y z` per line; '#' starts a comment; non-finite values rejected.
PointCloud read_xyz(const std::filesystem::path& path);
void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace mpcc
