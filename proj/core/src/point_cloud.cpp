#include "mpcc/point_cloud.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "mpcc/error.hpp"

namespace mpcc {

Tensor PointCloud::to_tensor() const {
  std::vector<double> flat;
  flat.reserve(points.size() * 3);
  for (const auto& p : points) flat.insert(flat.end(), p.begin(), p.end());
  return Tensor::from({points.size(), 3}, std::move(flat));
}

PointCloud PointCloud::from_tensor(const Tensor& t) {
  if (t.rank() != 2 || t.dim(1) != 3) {
    throw DimensionError("point tensor must be [N, 3], got " + shape_str(t.shape()));
  }
  PointCloud c;
  auto d = t.data();
  c.points.resize(t.dim(0));
  for (std::size_t i = 0; i < c.points.size(); ++i) c.points[i] = {d[3 * i], d[3 * i + 1], d[3 * i + 2]};
  return c;
}

void validate_cloud(const PointCloud& cloud, const char* what) {
  if (cloud.empty()) throw DomainError(std::string(what) + ": empty point cloud");
  for (const auto& p : cloud.points) {
    for (double v : p) {
      if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite coordinate");
    }
  }
}

PointCloud read_xyz(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read point cloud: " + path.string());
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const char* p = line.data();
    const char* end = p + line.size();
    Point3 pt{};
    int got = 0;
    while (got < 3) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r' || *p == ',')) ++p;
      if (p == end) break;
      auto [next, ec] = std::from_chars(p, end, pt[got]);
      if (ec != std::errc()) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed coordinate");
      }
      p = next;
      ++got;
    }
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (got == 0 && p == end) continue;
    if (got != 3 || p != end) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 'x y z'");
    }
    for (double v : pt) {
      if (!std::isfinite(v)) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": non-finite coordinate");
      }
    }
    cloud.points.push_back(pt);
  }
  return cloud;
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write point cloud: " + path.string());
  char buf[128];
  for (const auto& p : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p[0], p[1], p[2]);
    os << buf;
  }
  if (!os) throw IoError("failed writing point cloud: " + path.string());
}

}  // namespace mpcc
