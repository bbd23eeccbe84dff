#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mpcc/point_cloud.hpp"

namespace mpcc::synth {

enum class Category { box, cylinder, sphere_cap, l_bracket, table_like };

inline constexpr std::array<Category, 5> kAllCategories = {
    Category::box, Category::cylinder, Category::sphere_cap, Category::l_bracket, Category::table_like};

const char* category_name(Category c);
Category parse_category(const std::string& name);

struct ShapeSpec {
  Category category = Category::box;
  std::size_t n_points = 2048;
  std::uint64_t seed = 0;
};

/// Sensor/shape conditions of one domain.
struct DomainSpec {
  double noise_sigma = 0.0;                    // RMS of isotropic Gaussian jitter
  std::array<double, 3> density_bias{0, 0, 0};  // keep-probability ~ exp(bias . p)
  double dropout_ratio = 0.0;                  // uniform random point loss, in [0, 1)
  double crop_keep = 1.0;                      // fraction kept by the half-space crop
  std::array<double, 3> shape_scale{1, 1, 1};  // per-axis stretch of shape dimensions

  static DomainSpec source_default();
  static DomainSpec target_default();
  std::string echo() const;
};

void validate_domain(const DomainSpec& d);

/// Uniform-by-area surface samples of a random instance of the category,
/// with the domain's shape_scale applied to its dimensions.
PointCloud sample_complete(const ShapeSpec& spec, const std::array<double, 3>& shape_scale);

struct Pair {
  PointCloud partial;
  PointCloud complete;
};

/// complete = surface samples; partial = crop(perturb(complete)) resampled
/// to spec.n_points. Deterministic in spec.seed.
Pair gen_pair(const ShapeSpec& spec, const DomainSpec& dom);

}  // namespace mpcc::synth
