#include "mpcc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <variant>

#include "mpcc/error.hpp"
#include "mpcc/rng.hpp"

namespace mpcc::synth {

namespace {

constexpr double kPi = std::numbers::pi;

struct Rect {
  Point3 origin, u, v;
};
struct CylinderSide {
  Point3 base;
  double radius, height;
};
struct Disk {
  Point3 center;
  double radius;
};
struct Cap {
  Point3 center;
  double radius, z0;  // z0 relative to center
};
using Surface = std::variant<Rect, CylinderSide, Disk, Cap>;

double norm(const Point3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

double area(const Surface& s) {
  struct {
    double operator()(const Rect& r) const { return norm(r.u) * norm(r.v); }
    double operator()(const CylinderSide& c) const { return 2 * kPi * c.radius * c.height; }
    double operator()(const Disk& d) const { return kPi * d.radius * d.radius; }
    double operator()(const Cap& c) const { return 2 * kPi * c.radius * (c.radius - c.z0); }
  } visitor;
  return std::visit(visitor, s);
}

Point3 sample(const Surface& s, Rng& rng) {
  if (const auto* r = std::get_if<Rect>(&s)) {
    const double a = rng.uniform(), b = rng.uniform();
    return {r->origin[0] + a * r->u[0] + b * r->v[0], r->origin[1] + a * r->u[1] + b * r->v[1],
            r->origin[2] + a * r->u[2] + b * r->v[2]};
  }
  if (const auto* c = std::get_if<CylinderSide>(&s)) {
    const double th = rng.uniform(0, 2 * kPi), z = rng.uniform(0, c->height);
    return {c->base[0] + c->radius * std::cos(th), c->base[1] + c->radius * std::sin(th), c->base[2] + z};
  }
  if (const auto* d = std::get_if<Disk>(&s)) {
    const double rr = d->radius * std::sqrt(rng.uniform()), th = rng.uniform(0, 2 * kPi);
    return {d->center[0] + rr * std::cos(th), d->center[1] + rr * std::sin(th), d->center[2]};
  }
  const auto& c = std::get<Cap>(s);
  // Archimedes: uniform height on a sphere gives uniform area.
  const double z = rng.uniform(c.z0, c.radius), th = rng.uniform(0, 2 * kPi);
  const double rr = std::sqrt(std::max(0.0, c.radius * c.radius - z * z));
  return {c.center[0] + rr * std::cos(th), c.center[1] + rr * std::sin(th), c.center[2] + z};
}

Rect rect(Point3 o, Point3 u, Point3 v) { return {o, u, v}; }

// Faces of an axis-aligned box; `skip_top`/`skip_bottom` drop faces glued to
// another part.
void box_faces(const Point3& lo, const Point3& hi, std::vector<Surface>& out, bool skip_top = false,
               bool skip_bottom = false) {
  const double dx = hi[0] - lo[0], dy = hi[1] - lo[1], dz = hi[2] - lo[2];
  out.push_back(rect(lo, {0, dy, 0}, {0, 0, dz}));
  out.push_back(rect({hi[0], lo[1], lo[2]}, {0, dy, 0}, {0, 0, dz}));
  out.push_back(rect(lo, {dx, 0, 0}, {0, 0, dz}));
  out.push_back(rect({lo[0], hi[1], lo[2]}, {dx, 0, 0}, {0, 0, dz}));
  if (!skip_bottom) out.push_back(rect(lo, {dx, 0, 0}, {0, dy, 0}));
  if (!skip_top) out.push_back(rect({lo[0], lo[1], hi[2]}, {dx, 0, 0}, {0, dy, 0}));
}

std::vector<Surface> build_shape(Category cat, const std::array<double, 3>& s, Rng& rng) {
  auto range = [&](double lo, double hi, double k) { return std::min(0.95, rng.uniform(lo, hi) * k); };
  std::vector<Surface> surf;
  switch (cat) {
    case Category::box: {
      const double a = range(0.45, 0.65, s[0]), b = range(0.45, 0.65, s[1]), c = range(0.45, 0.65, s[2]);
      box_faces({-a, -b, -c}, {a, b, c}, surf);
      break;
    }
    case Category::cylinder: {
      const double r = range(0.4, 0.6, s[0]), h = range(0.5, 0.75, s[2]);
      surf.push_back(CylinderSide{{0, 0, -h}, r, 2 * h});
      surf.push_back(Disk{{0, 0, -h}, r});
      surf.push_back(Disk{{0, 0, h}, r});
      break;
    }
    case Category::sphere_cap: {
      // Radius follows x, cap height follows z.
      const double R = range(0.65, 0.8, s[0]);
      const double height = std::min(1.9 * R, R * rng.uniform(0.8, 1.2) * s[2]);
      const double z0 = R - height;
      const double zc = -0.5 * (z0 + R);  // center the cap's z-extent on 0
      surf.push_back(Cap{{0, 0, zc}, R, z0});
      surf.push_back(Disk{{0, 0, zc + z0}, std::sqrt(R * R - z0 * z0)});
      break;
    }
    case Category::l_bracket: {
      const double A = range(0.55, 0.8, s[0]), W = range(0.4, 0.6, s[1]), H = range(0.55, 0.8, s[2]);
      const double T = rng.uniform(0.08, 0.15);
      // Horizontal plate, with its top face split around the upright's footprint.
      const Point3 lo{-A, -W, -H}, hi{A, W, -H + T};
      box_faces(lo, hi, surf, /*skip_top=*/true);
      surf.push_back(rect({-A + T, -W, -H + T}, {2 * A - T, 0, 0}, {0, 2 * W, 0}));
      // Upright plate standing on the horizontal one.
      box_faces({-A, -W, -H + T}, {-A + T, W, H}, surf, false, /*skip_bottom=*/true);
      break;
    }
    case Category::table_like: {
      const double A = range(0.55, 0.8, s[0]), W = range(0.45, 0.7, s[1]), H = range(0.45, 0.7, s[2]);
      const double T = rng.uniform(0.05, 0.1), L = rng.uniform(0.06, 0.12);
      box_faces({-A, -W, H - T}, {A, W, H}, surf);
      for (double sx : {-1.0, 1.0}) {
        for (double sy : {-1.0, 1.0}) {
          const double x0 = sx < 0 ? -A + 0.05 : A - 0.05 - L;
          const double y0 = sy < 0 ? -W + 0.05 : W - 0.05 - L;
          box_faces({x0, y0, -H}, {x0 + L, y0 + L, H - T}, surf, /*skip_top=*/true);
        }
      }
      break;
    }
  }
  return surf;
}

PointCloud sample_surfaces(const std::vector<Surface>& surf, std::size_t n, Rng& rng) {
  std::vector<double> cum(surf.size());
  double total = 0.0;
  for (std::size_t i = 0; i < surf.size(); ++i) cum[i] = (total += area(surf[i]));
  PointCloud c;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), pick);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), surf.size() - 1);
    c.points.push_back(sample(surf[k], rng));
  }
  return c;
}

// Uniform downsample (or round-out with random duplicates) to exactly n points.
PointCloud resample(const PointCloud& c, std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  PointCloud out;
  out.points.reserve(n);
  if (c.size() >= n) {
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
    for (std::size_t i = 0; i < n; ++i) out.points.push_back(c[idx[i]]);
  } else {
    out.points = c.points;
    for (std::size_t i = c.size(); i < n; ++i) out.points.push_back(c[rng.below(c.size())]);
  }
  return out;
}

PointCloud perturb_and_crop(const PointCloud& complete, const DomainSpec& dom, double keep, Rng& rng) {
  const double bias_max = std::exp(std::abs(dom.density_bias[0]) + std::abs(dom.density_bias[1]) +
                                   std::abs(dom.density_bias[2]));
  // noise_sigma is the RMS displacement, split evenly over the three axes.
  const double axis_sigma = dom.noise_sigma / std::sqrt(3.0);
  PointCloud kept;
  for (const auto& p : complete.points) {
    if (dom.dropout_ratio > 0 && rng.uniform() < dom.dropout_ratio) continue;
    if (bias_max > 1.0) {
      const double w = std::exp(dom.density_bias[0] * p[0] + dom.density_bias[1] * p[1] +
                                dom.density_bias[2] * p[2]) / bias_max;
      if (rng.uniform() >= w) continue;
    }
    Point3 q = p;
    if (dom.noise_sigma > 0) {
      for (auto& v : q) v += axis_sigma * rng.normal();
    }
    kept.points.push_back(q);
  }
  if (keep >= 1.0 || kept.empty()) return kept;

  // Half-space crop through the interior: keep the `keep` fraction of points
  // with the smallest projection on a random direction.
  Point3 n{rng.normal(), rng.normal(), rng.normal()};
  const double len = std::max(norm(n), 1e-12);
  for (auto& v : n) v /= len;
  std::vector<double> proj(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    proj[i] = n[0] * kept[i][0] + n[1] * kept[i][1] + n[2] * kept[i][2];
  std::vector<double> sorted = proj;
  const auto cut_rank = static_cast<std::size_t>(std::floor(keep * static_cast<double>(sorted.size())));
  if (cut_rank == 0) return {};
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(cut_rank - 1), sorted.end());
  const double threshold = sorted[cut_rank - 1];
  PointCloud out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (proj[i] <= threshold) out.points.push_back(kept[i]);
  }
  return out;
}

}  // namespace

const char* category_name(Category c) {
  switch (c) {
    case Category::box: return "box";
    case Category::cylinder: return "cylinder";
    case Category::sphere_cap: return "sphere-cap";
    case Category::l_bracket: return "l-bracket";
    case Category::table_like: return "table-like";
  }
  return "?";
}

Category parse_category(const std::string& name) {
  for (auto c : kAllCategories) {
    if (name == category_name(c)) return c;
  }
  throw ConfigError("unknown shape category '" + name + "'");
}

DomainSpec DomainSpec::source_default() {
  DomainSpec d;
  d.noise_sigma = 0.005;
  d.crop_keep = 0.6;
  return d;
}

DomainSpec DomainSpec::target_default() {
  DomainSpec d;
  d.noise_sigma = 0.02;
  d.density_bias = {0.0, 0.0, 1.5};
  d.dropout_ratio = 0.2;
  d.crop_keep = 0.45;
  d.shape_scale = {1.4, 0.7, 1.3};
  return d;
}

std::string DomainSpec::echo() const {
  std::ostringstream os;
  os.precision(17);
  os << "noise_sigma=" << noise_sigma << ";density_bias=" << density_bias[0] << '/' << density_bias[1] << '/'
     << density_bias[2] << ";dropout_ratio=" << dropout_ratio << ";crop_keep=" << crop_keep
     << ";shape_scale=" << shape_scale[0] << '/' << shape_scale[1] << '/' << shape_scale[2];
  return os.str();
}

void validate_domain(const DomainSpec& d) {
  if (!(d.noise_sigma >= 0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(d.dropout_ratio >= 0 && d.dropout_ratio < 1)) throw ConfigError("dropout_ratio must lie in [0, 1)");
  if (!(d.crop_keep > 0 && d.crop_keep <= 1)) throw ConfigError("crop_keep must lie in (0, 1]");
  for (double s : d.shape_scale) {
    if (!(s > 0)) throw ConfigError("shape_scale entries must be positive");
  }
}

PointCloud sample_complete(const ShapeSpec& spec, const std::array<double, 3>& shape_scale) {
  if (spec.n_points == 0) throw ConfigError("n_points must be positive");
  Rng rng(spec.seed);
  const auto surf = build_shape(spec.category, shape_scale, rng);
  return sample_surfaces(surf, spec.n_points, rng);
}

Pair gen_pair(const ShapeSpec& spec, const DomainSpec& dom) {
  validate_domain(dom);
  Pair out;
  out.complete = sample_complete(spec, dom.shape_scale);
  Rng rng = Rng(spec.seed).split(0xC0FFEE);
  double keep = dom.crop_keep;
  for (int attempt = 0; attempt < 10; ++attempt) {
    PointCloud partial = perturb_and_crop(out.complete, dom, keep, rng);
    if (!partial.empty()) {
      out.partial = resample(partial, spec.n_points, rng);
      return out;
    }
    keep = std::min(1.0, keep + 0.1);
  }
  throw DomainError("gen_pair: cropping removed every point after 10 attempts");
}

}  // namespace mpcc::synth
