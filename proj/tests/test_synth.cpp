#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "mpcc/dataset.hpp"
#include "mpcc/error.hpp"
#include "mpcc/metrics.hpp"
#include "mpcc/rng.hpp"
#include "mpcc/synth.hpp"
#include "support/oracles.hpp"

using namespace mpcc;
using namespace mpcc::synth;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mpcc_synth_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<Point3> sorted(std::vector<Point3> v) {
  std::sort(v.begin(), v.end());
  return v;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

TEST(Rng, MatchesReferenceSplitmixStream) {
  // First outputs of the reference splitmix64 generator seeded with 0.
  Rng r(0);
  EXPECT_EQ(r.next_u64(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(r.next_u64(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(r.next_u64(), 0x06C45D188009454FULL);
}

TEST(Synth, SameSeedSamePair) {
  for (auto c : kAllCategories) {
    const auto a = gen_pair({c, 256, 42}, DomainSpec::target_default());
    const auto b = gen_pair({c, 256, 42}, DomainSpec::target_default());
    EXPECT_EQ(a.partial.points, b.partial.points);
    EXPECT_EQ(a.complete.points, b.complete.points);
    const auto d = gen_pair({c, 256, 43}, DomainSpec::target_default());
    EXPECT_NE(a.complete.points, d.complete.points);
  }
}

TEST(Synth, CleanSensorReturnsTheCompleteCloud) {
  const DomainSpec clean;  // no noise, no dropout, no bias, no crop
  for (auto c : kAllCategories) {
    const auto p = gen_pair({c, 300, 5}, clean);
    ASSERT_EQ(p.partial.size(), 300u);
    EXPECT_EQ(sorted(p.partial.points), sorted(p.complete.points)) << category_name(c);
  }
}

TEST(Synth, ExactPointCounts) {
  for (auto c : kAllCategories) {
    for (std::size_t n : {1u, 7u, 2048u}) {
      const auto p = gen_pair({c, n, 3}, DomainSpec::target_default());
      EXPECT_EQ(p.complete.size(), n);
      EXPECT_EQ(p.partial.size(), n);
    }
  }
}

TEST(Synth, CompleteCloudsLieInUnitCube) {
  for (auto c : kAllCategories) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto cloud = sample_complete({c, 512, seed}, {1, 1, 1});
      for (const auto& p : cloud.points) {
        for (double v : p) {
          EXPECT_GE(v, -1.0);
          EXPECT_LE(v, 1.0);
        }
      }
    }
  }
}

TEST(Synth, NoisyPartialStaysNearSurface) {
  const double eps = 0.01;
  DomainSpec dom;
  dom.noise_sigma = eps;
  std::size_t outside = 0, total = 0;
  for (auto c : kAllCategories) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto p = gen_pair({c, 1024, seed}, dom);
      for (const auto& q : p.partial.points) {
        outside += oracle::nn_sq(p.complete.points, q) > 9 * eps * eps;
        ++total;
      }
    }
  }
  EXPECT_LT(static_cast<double>(outside) / total, 0.01);
}

TEST(Synth, ImpossibleCropRaisesAfterRetries) {
  DomainSpec dom;
  dom.density_bias = {60, 60, 60};  // keep-probability vanishes away from (1, 1, 1)
  dom.dropout_ratio = 0.9;
  EXPECT_THROW(gen_pair({Category::sphere_cap, 4, 0}, dom), DomainError);
}

TEST(Synth, InvalidDomainRejected) {
  DomainSpec d;
  d.dropout_ratio = 1.0;
  EXPECT_THROW(gen_pair({}, d), ConfigError);
  d = {};
  d.crop_keep = 0.0;
  EXPECT_THROW(gen_pair({}, d), ConfigError);
  d = {};
  d.shape_scale = {1, -1, 1};
  EXPECT_THROW(gen_pair({}, d), ConfigError);
  EXPECT_THROW(parse_category("lamp"), ConfigError);
  EXPECT_EQ(parse_category("table-like"), Category::table_like);
}

TEST(Synth, DomainGapDominatesIntraDomainSpread) {
  const auto src = DomainSpec::source_default(), tgt = DomainSpec::target_default();
  for (auto c : kAllCategories) {
    std::vector<PointCloud> s, t;
    for (std::uint64_t i = 0; i < 8; ++i) {
      s.push_back(gen_pair({c, 512, 100 + i}, src).complete);
      t.push_back(gen_pair({c, 512, 200 + i}, tgt).complete);
    }
    std::vector<double> inter, intra_s, intra_t;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        inter.push_back(oracle::brute_cd(s[i], t[j]));
        if (i < j) {
          intra_s.push_back(oracle::brute_cd(s[i], s[j]));
          intra_t.push_back(oracle::brute_cd(t[i], t[j]));
        }
      }
    }
    EXPECT_GT(mean(inter), 5.0 * std::max(stddev(intra_s), stddev(intra_t))) << category_name(c);
  }
}

TEST(Datasets, SplitCountsAndSealedTargetTruth) {
  const auto ds = make_domain_datasets(3, DomainSpec::source_default(), DomainSpec::target_default(), 9, 64);
  const std::size_t n = 3 * kAllCategories.size();
  EXPECT_EQ(ds.source.size(), n);
  EXPECT_EQ(ds.target.size(), n);
  EXPECT_EQ(ds.target_eval.size(), n);
  for (const auto& s : ds.source.samples()) EXPECT_TRUE(s.gt.has_value());
  for (const auto& s : ds.target.samples()) EXPECT_FALSE(s.gt.has_value());
  for (const auto& s : ds.target_eval.samples()) EXPECT_TRUE(s.gt.has_value());
  // Held-out evaluation shapes differ from the unlabeled training shapes.
  EXPECT_NE(ds.target.samples()[0].partial.points, ds.target_eval.samples()[0].partial.points);
  EXPECT_EQ(ds.source.categories().size(), kAllCategories.size());
}

TEST(Datasets, DeterministicPerSeed) {
  const auto a = make_domain_datasets(2, DomainSpec::source_default(), DomainSpec::target_default(), 4, 32);
  const auto b = make_domain_datasets(2, DomainSpec::source_default(), DomainSpec::target_default(), 4, 32);
  for (std::size_t i = 0; i < a.source.size(); ++i) {
    EXPECT_EQ(a.source.samples()[i].partial.points, b.source.samples()[i].partial.points);
    EXPECT_EQ(a.target.samples()[i].partial.points, b.target.samples()[i].partial.points);
  }
}

TEST(Datasets, DiskLayoutRoundTrips) {
  const fs::path root = scratch_dir("layout");
  const auto src = DomainSpec::source_default(), tgt = DomainSpec::target_default();
  const auto ds = make_domain_datasets(2, src, tgt, 11, 48);
  write_domain_datasets(root, ds, src, tgt, 11, 48);

  EXPECT_TRUE(fs::exists(root / "source" / "box" / "00000.xyz"));
  EXPECT_TRUE(fs::exists(root / "source" / "box" / "00000.gt.xyz"));
  EXPECT_TRUE(fs::exists(root / "target_eval" / "cylinder" / "00001.gt.xyz"));
  for (const auto& e : fs::recursive_directory_iterator(root / "target")) {
    const std::string name = e.path().filename().string();
    EXPECT_EQ(name.find(".gt."), std::string::npos) << e.path();
  }

  const Dataset loaded = load_split(root / "target_eval");
  ASSERT_EQ(loaded.size(), ds.target_eval.size());
  std::map<std::string, const Sample*> by_key;
  for (const auto& s : ds.target_eval.samples()) by_key[s.category + "/" + s.id] = &s;
  for (const auto& s : loaded.samples()) {
    const Sample* orig = by_key.at(s.category + "/" + s.id);
    EXPECT_EQ(s.partial.points, orig->partial.points);
    ASSERT_TRUE(s.gt.has_value());
    EXPECT_EQ(s.gt->points, orig->gt->points);
  }

  std::ifstream m(root / "manifest.csv");
  std::string header, line;
  std::getline(m, header);
  EXPECT_EQ(header, "split,category,id,has_gt,seed,n_points,domain_spec");
  std::size_t rows = 0, target_with_gt = 0;
  while (std::getline(m, line)) {
    ++rows;
    if (line.rfind("target,", 0) == 0 && line.find(",1,11,") != std::string::npos) ++target_with_gt;
    EXPECT_NE(line.find(",11,48,noise_sigma="), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 3 * ds.source.size());
  EXPECT_EQ(target_with_gt, 0u);
  fs::remove_all(root);
}

TEST(Datasets, AccessCounter) {
  const auto ds = make_domain_datasets(1, DomainSpec::source_default(), DomainSpec::target_default(), 0, 16);
  EXPECT_EQ(ds.target.reads(), 0u);
  ds.target.get(0);
  ds.target.get(1);
  EXPECT_EQ(ds.target.reads(), 2u);
  EXPECT_THROW(ds.target.get(ds.target.size()), UsageError);
}

TEST(PointIo, ReadErrors) {
  const fs::path root = scratch_dir("io");
  EXPECT_THROW(read_xyz(root / "missing.xyz"), IoError);
  auto write = [&](const char* name, const char* body) {
    std::ofstream(root / name) << body;
    return root / name;
  };
  EXPECT_THROW(read_xyz(write("short.xyz", "1 2\n")), IoError);
  EXPECT_THROW(read_xyz(write("junk.xyz", "1 2 abc\n")), IoError);
  EXPECT_THROW(read_xyz(write("extra.xyz", "1 2 3 4\n")), IoError);
  EXPECT_THROW(read_xyz(write("nan.xyz", "1 nan 3\n")), IoError);
  const auto ok = read_xyz(write("ok.xyz", "# header\n1 2 3\n\n-0.5,0.25,1e-3\n"));
  ASSERT_EQ(ok.size(), 2u);
  EXPECT_EQ(ok[1], (Point3{-0.5, 0.25, 1e-3}));
  EXPECT_THROW(load_split(root / "nope"), IoError);
  fs::remove_all(root);
}

TEST(PointIo, WriteReadIsBitExact) {
  const fs::path root = scratch_dir("exact");
  Rng rng(3);
  PointCloud c;
  for (int i = 0; i < 100; ++i) c.points.push_back({rng.normal(), rng.normal() * 1e-7, rng.uniform() * 1e5});
  write_xyz(root / "c.xyz", c);
  EXPECT_EQ(read_xyz(root / "c.xyz").points, c.points);
  fs::remove_all(root);
}
