#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpcc/point_cloud.hpp"
#include "mpcc/synth.hpp"

namespace mpcc {

struct Sample {
  std::string category;
  std::string id;
  PointCloud partial;
  std::optional<PointCloud> gt;
};

/// Ordered list of samples with a read counter, so tests can prove a
/// training run never touched a split.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Sample> samples) : samples_(std::move(samples)) {}

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  /// Counted access used by training and evaluation.
  const Sample& get(std::size_t i) const;
  /// Uncounted access for bookkeeping (ids, categories, writing to disk).
  const std::vector<Sample>& samples() const { return samples_; }
  std::vector<Sample>& samples() { return samples_; }

  std::size_t reads() const { return reads_; }
  void reset_reads() { reads_ = 0; }

  std::vector<std::string> categories() const;

 private:
  std::vector<Sample> samples_;
  mutable std::size_t reads_ = 0;
};

struct DomainDatasets {
  Dataset source;       // partial + gt
  Dataset target;       // partial only
  Dataset target_eval;  // held-out partial + gt
};

inline constexpr const char* kSourceSplit = "source";
inline constexpr const char* kTargetSplit = "target";
inline constexpr const char* kTargetEvalSplit = "target_eval";

DomainDatasets make_domain_datasets(std::size_t n_per_category, const synth::DomainSpec& source,
                                    const synth::DomainSpec& target, std::uint64_t seed,
                                    std::size_t n_points = 2048);

/// Writes `<root>/<split>/<category>/<id>.xyz` (+ `<id>.gt.xyz` when gt is
/// present) and `<root>/manifest.csv`.
void write_domain_datasets(const std::filesystem::path& root, const DomainDatasets& ds,
                           const synth::DomainSpec& source, const synth::DomainSpec& target,
                           std::uint64_t seed, std::size_t n_points);

/// Loads one split directory (the one holding category subdirectories).
/// Samples are ordered by category then id.
Dataset load_split(const std::filesystem::path& split_dir);

}  // namespace mpcc
