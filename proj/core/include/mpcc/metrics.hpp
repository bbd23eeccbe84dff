#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mpcc/point_cloud.hpp"
#include "mpcc/tensor.hpp"

namespace mpcc::metrics {

enum class Metric { cd, ucd, uhd };

/// Self-describing variant labels written next to every reported value.
const char* variant_name(Metric m);
/// Reporting scale: 1e4 for CD/UCD, 1e2 for UHD.
double report_scale(Metric m);
Metric parse_metric(const std::string& name);

struct MetricResult {
  double value = 0.0;  // unscaled
  Metric metric = Metric::cd;
  double scale_applied = 1.0;

  double scaled() const { return value * scale_applied; }
};

struct Neighbor {
  std::size_t index = 0;
  double sq_dist = 0.0;
};

/// Exact nearest-neighbour index over a fixed reference cloud using uniform
/// grid buckets (cell = bbox diagonal / cbrt(N)) and ring expansion.
class NearestGrid {
 public:
  explicit NearestGrid(const std::vector<Point3>& reference);

  Neighbor nearest(const Point3& q) const;

 private:
  long cell_of(double v, int axis) const;

  std::vector<Point3> ref_;
  Point3 origin_{};
  double cell_ = 1.0;
  long dims_[3] = {1, 1, 1};
  std::vector<std::size_t> starts_;  // CSR offsets per cell
  std::vector<std::size_t> items_;   // reference indices grouped by cell
};

/// O(N*M) scan; first minimum wins on ties.
Neighbor nearest_brute(const std::vector<Point3>& reference, const Point3& q);

/// Nearest reference point for every query (accelerated path).
std::vector<Neighbor> nearest_all(const std::vector<Point3>& reference, const std::vector<Point3>& queries);

// Accelerated metrics.
double chamfer(const PointCloud& p, const PointCloud& q);
double ucd(const PointCloud& pred, const PointCloud& partial);
double uhd(const PointCloud& pred, const PointCloud& partial);

// Brute-force reference implementations.
double chamfer_brute(const PointCloud& p, const PointCloud& q);
double ucd_brute(const PointCloud& pred, const PointCloud& partial);
double uhd_brute(const PointCloud& pred, const PointCloud& partial);

MetricResult evaluate_metric(Metric m, const PointCloud& pred, const PointCloud& reference);

/// Differentiable Chamfer distance between pred[N, 3] and a fixed target.
/// Nearest-neighbour assignments are held fixed in the backward pass.
Tensor chamfer_loss(const Tensor& pred, const PointCloud& target);

}  // namespace mpcc::metrics
