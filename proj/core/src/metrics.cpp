#include "mpcc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpcc/error.hpp"

namespace mpcc::metrics {

namespace {

void require_nonempty(const PointCloud& c, const char* what) {
  if (c.empty()) throw DomainError(std::string(what) + ": empty point cloud");
}

// First minimum wins: an equal distance only replaces the current best when
// it comes from a lower index.
void consider(Neighbor& best, std::size_t idx, double d) {
  if (d < best.sq_dist || (d == best.sq_dist && idx < best.index)) best = {idx, d};
}

}  // namespace

const char* variant_name(Metric m) {
  switch (m) {
    case Metric::cd: return "cd-l2-sum";
    case Metric::ucd: return "ucd-sq-partial2pred";
    case Metric::uhd: return "uhd-l2-partial2pred";
  }
  return "?";
}

double report_scale(Metric m) { return m == Metric::uhd ? 1e2 : 1e4; }

Metric parse_metric(const std::string& name) {
  if (name == "cd") return Metric::cd;
  if (name == "ucd") return Metric::ucd;
  if (name == "uhd") return Metric::uhd;
  throw ConfigError("unknown metric '" + name + "' (expected cd, ucd or uhd)");
}

NearestGrid::NearestGrid(const std::vector<Point3>& reference) : ref_(reference) {
  if (ref_.empty()) throw DomainError("NearestGrid: empty reference cloud");
  constexpr double inf = std::numeric_limits<double>::infinity();
  Point3 lo{inf, inf, inf}, hi{-inf, -inf, -inf};
  for (const auto& p : ref_) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  origin_ = lo;
  const double diag = std::sqrt(squared_distance(lo, hi));
  cell_ = diag / std::cbrt(static_cast<double>(ref_.size()));
  if (!(cell_ > 0.0)) cell_ = 1.0;
  for (int a = 0; a < 3; ++a) dims_[a] = static_cast<long>(std::floor((hi[a] - lo[a]) / cell_)) + 1;

  const auto ncells = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
  std::vector<std::size_t> cell_idx(ref_.size());
  starts_.assign(ncells + 1, 0);
  for (std::size_t i = 0; i < ref_.size(); ++i) {
    long c[3];
    for (int a = 0; a < 3; ++a) c[a] = std::clamp(cell_of(ref_[i][a], a), 0L, dims_[a] - 1);
    cell_idx[i] = static_cast<std::size_t>((c[2] * dims_[1] + c[1]) * dims_[0] + c[0]);
    ++starts_[cell_idx[i] + 1];
  }
  for (std::size_t c = 0; c < ncells; ++c) starts_[c + 1] += starts_[c];
  items_.resize(ref_.size());
  std::vector<std::size_t> fill(starts_.begin(), starts_.end() - 1);
  for (std::size_t i = 0; i < ref_.size(); ++i) items_[fill[cell_idx[i]]++] = i;
}

long NearestGrid::cell_of(double v, int axis) const {
  return static_cast<long>(std::floor((v - origin_[axis]) / cell_));
}

Neighbor NearestGrid::nearest(const Point3& q) const {
  long qc[3];
  long r0 = 0, rmax = 0;
  for (int a = 0; a < 3; ++a) {
    // Clamp far-away queries so ring arithmetic stays small; the lower bound
    // below uses the unclamped distance so exactness is unaffected.
    const double raw = std::floor((q[a] - origin_[a]) / cell_);
    qc[a] = static_cast<long>(std::clamp(raw, -1e9, 1e9));
    const long below = -qc[a];
    const long above = qc[a] - (dims_[a] - 1);
    r0 = std::max({r0, below, above});
    rmax = std::max({rmax, std::abs(qc[a]), std::abs(qc[a] - (dims_[a] - 1))});
  }
  Neighbor best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  auto scan_cell = [&](long x, long y, long z) {
    const auto c = static_cast<std::size_t>((z * dims_[1] + y) * dims_[0] + x);
    for (std::size_t k = starts_[c]; k < starts_[c + 1]; ++k) {
      const std::size_t idx = items_[k];
      consider(best, idx, squared_distance(ref_[idx], q));
    }
  };
  for (long r = r0; r <= rmax; ++r) {
    const long x0 = std::max(0L, qc[0] - r), x1 = std::min(dims_[0] - 1, qc[0] + r);
    const long y0 = std::max(0L, qc[1] - r), y1 = std::min(dims_[1] - 1, qc[1] + r);
    const long z0 = std::max(0L, qc[2] - r), z1 = std::min(dims_[2] - 1, qc[2] + r);
    for (long x = x0; x <= x1; ++x) {
      const bool x_edge = std::abs(x - qc[0]) == r;
      for (long y = y0; y <= y1; ++y) {
        const bool y_edge = std::abs(y - qc[1]) == r;
        if (x_edge || y_edge) {
          for (long z = z0; z <= z1; ++z) scan_cell(x, y, z);
        } else {
          if (qc[2] - r >= z0 && qc[2] - r <= z1) scan_cell(x, y, qc[2] - r);
          if (r > 0 && qc[2] + r >= z0 && qc[2] + r <= z1) scan_cell(x, y, qc[2] + r);
        }
      }
    }
    // Every unvisited cell is at Chebyshev ring >= r + 1, hence at least
    // r * cell away. The small shrink absorbs rounding in cell assignment.
    const double bound = static_cast<double>(r) * cell_ * (1.0 - 1e-9);
    if (best.index != std::numeric_limits<std::size_t>::max() && best.sq_dist < bound * bound) break;
  }
  return best;
}

Neighbor nearest_brute(const std::vector<Point3>& reference, const Point3& q) {
  if (reference.empty()) throw DomainError("nearest_brute: empty reference cloud");
  Neighbor best{0, squared_distance(reference[0], q)};
  for (std::size_t i = 1; i < reference.size(); ++i) {
    const double d = squared_distance(reference[i], q);
    if (d < best.sq_dist) best = {i, d};
  }
  return best;
}

std::vector<Neighbor> nearest_all(const std::vector<Point3>& reference, const std::vector<Point3>& queries) {
  const NearestGrid grid(reference);
  std::vector<Neighbor> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = grid.nearest(queries[i]);
  return out;
}

namespace {

double mean_sq(const std::vector<Neighbor>& nn) {
  double s = 0.0;
  for (const auto& n : nn) s += n.sq_dist;
  return s / static_cast<double>(nn.size());
}

double max_dist(const std::vector<Neighbor>& nn) {
  double m = 0.0;
  for (const auto& n : nn) m = std::max(m, std::sqrt(n.sq_dist));
  return m;
}

std::vector<Neighbor> brute_all(const std::vector<Point3>& reference, const std::vector<Point3>& queries) {
  std::vector<Neighbor> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = nearest_brute(reference, queries[i]);
  return out;
}

}  // namespace

double chamfer(const PointCloud& p, const PointCloud& q) {
  require_nonempty(p, "chamfer");
  require_nonempty(q, "chamfer");
  return mean_sq(nearest_all(q.points, p.points)) + mean_sq(nearest_all(p.points, q.points));
}

double ucd(const PointCloud& pred, const PointCloud& partial) {
  require_nonempty(pred, "ucd");
  require_nonempty(partial, "ucd");
  return mean_sq(nearest_all(pred.points, partial.points));
}

double uhd(const PointCloud& pred, const PointCloud& partial) {
  require_nonempty(pred, "uhd");
  require_nonempty(partial, "uhd");
  return max_dist(nearest_all(pred.points, partial.points));
}

double chamfer_brute(const PointCloud& p, const PointCloud& q) {
  require_nonempty(p, "chamfer");
  require_nonempty(q, "chamfer");
  return mean_sq(brute_all(q.points, p.points)) + mean_sq(brute_all(p.points, q.points));
}

double ucd_brute(const PointCloud& pred, const PointCloud& partial) {
  require_nonempty(pred, "ucd");
  require_nonempty(partial, "ucd");
  return mean_sq(brute_all(pred.points, partial.points));
}

double uhd_brute(const PointCloud& pred, const PointCloud& partial) {
  require_nonempty(pred, "uhd");
  require_nonempty(partial, "uhd");
  return max_dist(brute_all(pred.points, partial.points));
}

MetricResult evaluate_metric(Metric m, const PointCloud& pred, const PointCloud& reference) {
  MetricResult r;
  r.metric = m;
  r.scale_applied = report_scale(m);
  switch (m) {
    case Metric::cd: r.value = chamfer(pred, reference); break;
    case Metric::ucd: r.value = ucd(pred, reference); break;
    case Metric::uhd: r.value = uhd(pred, reference); break;
  }
  return r;
}

Tensor chamfer_loss(const Tensor& pred, const PointCloud& target) {
  const PointCloud p = PointCloud::from_tensor(pred);
  require_nonempty(p, "chamfer_loss");
  require_nonempty(target, "chamfer_loss");
  auto fwd = nearest_all(target.points, p.points);  // pred -> target
  auto bwd = nearest_all(p.points, target.points);  // target -> pred
  const double value = mean_sq(fwd) + mean_sq(bwd);
  return autograd::make_result(
      "chamfer_loss", {}, {value}, {pred},
      [fwd = std::move(fwd), bwd = std::move(bwd), tgt = target.points](detail::Node& self) {
        const auto& x = self.inputs[0]->data;
        auto& g = self.inputs[0]->ensure_grad();
        const double go = self.grad[0];
        const double wf = 2.0 * go / static_cast<double>(fwd.size());
        const double wb = 2.0 * go / static_cast<double>(bwd.size());
        for (std::size_t i = 0; i < fwd.size(); ++i) {
          const auto& q = tgt[fwd[i].index];
          for (int a = 0; a < 3; ++a) g[3 * i + a] += wf * (x[3 * i + a] - q[a]);
        }
        for (std::size_t j = 0; j < bwd.size(); ++j) {
          const std::size_t i = bwd[j].index;
          for (int a = 0; a < 3; ++a) g[3 * i + a] += wb * (x[3 * i + a] - tgt[j][a]);
        }
      });
}

}  // namespace mpcc::metrics
