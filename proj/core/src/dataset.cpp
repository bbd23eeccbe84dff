#include "mpcc/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "mpcc/error.hpp"
#include "mpcc/rng.hpp"

namespace mpcc {

namespace fs = std::filesystem;

const Sample& Dataset::get(std::size_t i) const {
  if (i >= samples_.size()) throw UsageError("dataset index out of range");
  ++reads_;
  return samples_[i];
}

std::vector<std::string> Dataset::categories() const {
  std::vector<std::string> out;
  for (const auto& s : samples_) {
    if (std::find(out.begin(), out.end(), s.category) == out.end()) out.push_back(s.category);
  }
  return out;
}

namespace {

std::string sample_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu", i);
  return buf;
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t split, std::size_t category, std::size_t i) {
  Rng r(seed);
  r = r.split(split + 1);
  r = r.split(category + 1);
  return r.split(i + 1).next_u64();
}

Dataset make_split(std::size_t n_per_category, const synth::DomainSpec& dom, std::uint64_t seed,
                   std::uint64_t split, std::size_t n_points, bool keep_gt) {
  std::vector<Sample> samples;
  for (std::size_t c = 0; c < synth::kAllCategories.size(); ++c) {
    for (std::size_t i = 0; i < n_per_category; ++i) {
      synth::ShapeSpec spec{synth::kAllCategories[c], n_points, sample_seed(seed, split, c, i)};
      auto pair = synth::gen_pair(spec, dom);
      Sample s{synth::category_name(spec.category), sample_id(i), std::move(pair.partial), std::nullopt};
      if (keep_gt) s.gt = std::move(pair.complete);
      samples.push_back(std::move(s));
    }
  }
  return Dataset(std::move(samples));
}

void write_split(const fs::path& dir, const Dataset& ds) {
  for (const auto& s : ds.samples()) {
    const fs::path cat = dir / s.category;
    fs::create_directories(cat);
    write_xyz(cat / (s.id + ".xyz"), s.partial);
    if (s.gt) write_xyz(cat / (s.id + ".gt.xyz"), *s.gt);
  }
}

}  // namespace

DomainDatasets make_domain_datasets(std::size_t n_per_category, const synth::DomainSpec& source,
                                    const synth::DomainSpec& target, std::uint64_t seed,
                                    std::size_t n_points) {
  synth::validate_domain(source);
  synth::validate_domain(target);
  DomainDatasets out;
  out.source = make_split(n_per_category, source, seed, 0, n_points, true);
  out.target = make_split(n_per_category, target, seed, 1, n_points, false);
  out.target_eval = make_split(n_per_category, target, seed, 2, n_points, true);
  return out;
}

void write_domain_datasets(const fs::path& root, const DomainDatasets& ds, const synth::DomainSpec& source,
                           const synth::DomainSpec& target, std::uint64_t seed, std::size_t n_points) {
  fs::create_directories(root);
  write_split(root / kSourceSplit, ds.source);
  write_split(root / kTargetSplit, ds.target);
  write_split(root / kTargetEvalSplit, ds.target_eval);
  std::ofstream m(root / "manifest.csv", std::ios::trunc);
  if (!m) throw IoError("cannot write manifest: " + (root / "manifest.csv").string());
  m << "split,category,id,has_gt,seed,n_points,domain_spec\n";
  auto rows = [&](const char* split, const Dataset& d, const synth::DomainSpec& dom) {
    for (const auto& s : d.samples()) {
      m << split << ',' << s.category << ',' << s.id << ',' << (s.gt ? 1 : 0) << ',' << seed << ','
        << n_points << ',' << dom.echo() << '\n';
    }
  };
  rows(kSourceSplit, ds.source, source);
  rows(kTargetSplit, ds.target, target);
  rows(kTargetEvalSplit, ds.target_eval, target);
}

Dataset load_split(const fs::path& split_dir) {
  if (!fs::is_directory(split_dir)) throw IoError("dataset split directory not found: " + split_dir.string());
  std::set<fs::path> cats;
  for (const auto& e : fs::directory_iterator(split_dir)) {
    if (e.is_directory()) cats.insert(e.path());
  }
  std::vector<Sample> samples;
  for (const auto& cat : cats) {
    std::set<std::string> ids;
    for (const auto& e : fs::directory_iterator(cat)) {
      const std::string name = e.path().filename().string();
      const std::string suffix = ".xyz";
      if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
        continue;
      if (name.size() > 7 && name.compare(name.size() - 7, 7, ".gt.xyz") == 0) continue;
      ids.insert(name.substr(0, name.size() - suffix.size()));
    }
    for (const auto& id : ids) {
      Sample s;
      s.category = cat.filename().string();
      s.id = id;
      s.partial = read_xyz(cat / (id + ".xyz"));
      validate_cloud(s.partial, ("partial cloud " + (cat / id).string()).c_str());
      const fs::path gt = cat / (id + ".gt.xyz");
      if (fs::exists(gt)) s.gt = read_xyz(gt);
      samples.push_back(std::move(s));
    }
  }
  if (samples.empty()) throw IoError("no samples found under " + split_dir.string());
  return Dataset(std::move(samples));
}

}  // namespace mpcc
