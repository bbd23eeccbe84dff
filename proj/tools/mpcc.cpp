// mpcc: dataset generation, training, evaluation, scan inspection,
// benchmarking and embedding export.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpcc/dataset.hpp"
#include "mpcc/error.hpp"
#include "mpcc/evaluate.hpp"
#include "mpcc/flops.hpp"
#include "mpcc/model.hpp"
#include "mpcc/ops.hpp"
#include "mpcc/train.hpp"
#include "mpcc/zorder.hpp"

namespace fs = std::filesystem;
using namespace mpcc;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kIo = 3, kDivergence = 4 };

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("MPCC_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0') throw ConfigError(std::string("MPCC_SEED is not an unsigned integer: ") + s);
  return v;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

void require_dir(const fs::path& dir, const char* flag) {
  if (dir.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_directory(dir)) throw IoError(std::string(flag) + ": no such directory: " + dir.string());
}

// Config from an optional file, then key=value overrides, then MPCC_SEED.
ModelConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  ModelConfig cfg = path.empty() ? ModelConfig{} : ModelConfig::load(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (auto s = env_seed()) cfg.seed = *s;
  cfg.validate();
  return cfg;
}

void print_config(const ModelConfig& cfg) {
  std::cout << "# resolved config\n" << cfg.to_string() << "# seed " << cfg.seed << "\n";
}

// Checkpoints carry tensors only; the config lives next to them.
ModelConfig checkpoint_config(const fs::path& ckpt, const std::string& config_path,
                              const std::vector<std::string>& overrides) {
  if (!config_path.empty()) return resolve_config(config_path, overrides);
  const fs::path sibling = ckpt.parent_path() / "config.txt";
  if (!fs::exists(sibling)) throw IoError("no --config given and no config.txt next to " + ckpt.string());
  return resolve_config(sibling.string(), overrides);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- gen-data

struct GenArgs {
  std::string out;
  std::size_t n_per_category = 200;
  std::size_t n_points = 2048;
  std::optional<std::uint64_t> seed;
  bool same_domain = false;
};

int cmd_gen_data(const GenArgs& a) {
  const std::uint64_t seed = a.seed ? *a.seed : env_seed().value_or(0);
  const auto src = synth::DomainSpec::source_default();
  const auto tgt = a.same_domain ? src : synth::DomainSpec::target_default();
  std::cout << "# seed " << seed << "\n# source " << src.echo() << "\n# target " << tgt.echo() << "\n";
  const auto ds = make_domain_datasets(a.n_per_category, src, tgt, seed, a.n_points);
  write_domain_datasets(a.out, ds, src, tgt, seed, a.n_points);
  std::cout << "wrote " << ds.source.size() << " source, " << ds.target.size() << " target, "
            << ds.target_eval.size() << " target_eval samples to " << a.out << "\n";
  return kOk;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string config, source_dir, target_dir, out;
  std::vector<std::string> overrides;
  bool dry_run = false;
};

int cmd_train(const TrainArgs& a) {
  const ModelConfig cfg = resolve_config(a.config, a.overrides);
  print_config(cfg);
  if (a.dry_run) {
    std::cout << "config ok\n";
    return kOk;
  }
  require_dir(a.source_dir, "--source-dir");
  if (a.out.empty()) throw UsageError("--out is required");
  const Dataset source = load_split(a.source_dir);
  Dataset target;
  if (!cfg.alignment_disabled()) {
    require_dir(a.target_dir, "--target-dir");
    target = load_split(a.target_dir);
  }
  Model model(cfg);
  TrainOptions opts;
  opts.out_dir = a.out;
  opts.on_step = [](const LossRow& r) {
    if (r.step % 25 == 0) {
      std::printf("step %zu loss_cd %.6g l_sp %.6g l_ch %.6g total %.6g\n", r.step, r.loss.loss_cd, r.loss.l_sp,
                  r.loss.l_ch, r.loss.total);
    }
  };
  const TrainResult res = train_loop(model, source, target, opts);
  std::cout << "trained " << res.steps << " steps over " << res.epochs << " epochs; wrote " << a.out << "\n";
  return kOk;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string ckpt, config, data_dir, metric = "cd", out;
  std::vector<std::string> overrides;
};

int cmd_eval(const EvalArgs& a) {
  const ModelConfig cfg = checkpoint_config(a.ckpt, a.config, a.overrides);
  print_config(cfg);
  const metrics::Metric metric = metrics::parse_metric(a.metric);
  require_dir(a.data_dir, "--data-dir");
  Model model(cfg);
  model.load(a.ckpt);
  const Dataset data = load_split(a.data_dir);
  const EvalTable table = evaluate(model, data, metric);
  for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";
  const std::string csv = table.to_csv();
  if (!a.out.empty()) open_out(a.out) << csv;
  std::cout << csv;
  return kOk;
}

// -------------------------------------------------------------------- scan

struct ScanArgs {
  std::string input, input2, out;
  std::size_t g = 64, k = 32;
  int bits = zorder::kDefaultBits;
};

void write_patches(const fs::path& dir, const std::string& label, const zorder::PatchSet& ps,
                   std::ofstream& csv) {
  fs::create_directories(dir / label);
  PointCloud sorted;
  for (std::size_t g = 0; g < ps.G; ++g) {
    PointCloud patch;
    std::uint64_t lo = ps.codes[g * ps.K], hi = lo;
    for (std::size_t k = 0; k < ps.K; ++k) {
      patch.points.push_back(ps.at(g, k));
      lo = std::min(lo, ps.codes[g * ps.K + k]);
      hi = std::max(hi, ps.codes[g * ps.K + k]);
    }
    char name[32];
    std::snprintf(name, sizeof(name), "patch_%04zu.xyz", g);
    write_xyz(dir / label / name, patch);
    sorted.points.insert(sorted.points.end(), patch.points.begin(), patch.points.end());
    const auto& c = ps.centers[g];
    csv << label << ',' << g << ',' << fmt(c[0]) << ',' << fmt(c[1]) << ',' << fmt(c[2]) << ',' << lo << ','
        << hi << '\n';
  }
  write_xyz(dir / (label + "_sequence.xyz"), sorted);
}

int cmd_scan(const ScanArgs& a) {
  const PointCloud ca = read_xyz(a.input);
  validate_cloud(ca, a.input.c_str());
  std::optional<PointCloud> cb;
  if (!a.input2.empty()) {
    cb = read_xyz(a.input2);
    validate_cloud(*cb, a.input2.c_str());
  }
  if (a.g == 0 || a.k == 0) throw ConfigError("--g and --k must be at least 1");
  const zorder::GridParams grid = cb ? zorder::joint_grid(ca, *cb, a.bits) : zorder::own_grid(ca, a.bits);
  std::cout << "# seed 0\n# g " << a.g << " k " << a.k << " bits " << a.bits << "\n# c_min " << fmt(grid.c_min[0])
            << ' ' << fmt(grid.c_min[1]) << ' ' << fmt(grid.c_min[2]) << " scale " << fmt(grid.scale) << "\n";
  fs::create_directories(a.out);
  std::ofstream csv = open_out(fs::path(a.out) / "patches.csv");
  csv << "cloud,patch,cx,cy,cz,code_min,code_max\n";
  write_patches(a.out, "a", zorder::partition(zorder::serialize(ca, grid), ca, a.g, a.k), csv);
  if (cb) write_patches(a.out, "b", zorder::partition(zorder::serialize(*cb, grid), *cb, a.g, a.k), csv);
  std::cout << "wrote " << a.g * (cb ? 2 : 1) << " patches to " << a.out << "\n";
  return kOk;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
  std::string ckpt, config, out = ".";
  std::vector<std::string> overrides;
  std::size_t points = 2048, batch = 1, reps = 100;
};

int cmd_bench(const BenchArgs& a) {
  if (a.reps == 0 || a.batch == 0 || a.points == 0) throw ConfigError("--points, --batch and --reps must be positive");
  ModelConfig cfg = a.ckpt.empty() ? resolve_config(a.config, a.overrides)
                                   : checkpoint_config(a.ckpt, a.config, a.overrides);
  cfg.n_points = a.points;
  cfg.batch = a.batch;
  cfg.validate();
  print_config(cfg);
  Model model(cfg);
  if (!a.ckpt.empty()) model.load(a.ckpt);

  std::vector<PointCloud> inputs;
  for (std::size_t b = 0; b < a.batch; ++b) {
    const auto cat = synth::kAllCategories[b % synth::kAllCategories.size()];
    inputs.push_back(synth::gen_pair({cat, a.points, cfg.seed + b}, synth::DomainSpec::target_default()).partial);
  }
  std::vector<const PointCloud*> ptrs;
  for (const auto& c : inputs) ptrs.push_back(&c);

  const std::uint64_t params = model.parameter_count();
  const std::uint64_t flops = forward_flops(cfg) * a.batch;
  fs::create_directories(a.out);
  std::ofstream det = open_out(fs::path(a.out) / "bench.csv");
  std::ofstream tim = open_out(fs::path(a.out) / "bench_timing.csv");
  det << "rep,n_points,batch,params,flops,checksum\n";
  tim << "rep,ms\n";
  std::vector<double> ms;
  for (std::size_t r = 0; r < a.reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const InferOutput out = [&] {
      autograd::NoGradGuard ng;
      return model.forward_infer(ptrs);
    }();
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    double checksum = 0.0;
    for (const auto& c : out.completed) {
      for (const auto& p : c.points) checksum += p[0] + p[1] + p[2];
    }
    det << r << ',' << a.points << ',' << a.batch << ',' << params << ',' << flops << ',' << fmt(checksum) << '\n';
    tim << r << ',' << fmt(ms.back()) << '\n';
  }
  double mean = 0.0;
  for (double v : ms) mean += v;
  mean /= static_cast<double>(ms.size());
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::printf("params %llu\nflops_per_forward %llu\nmean_ms %.4f\nmedian_ms %.4f\nreps %zu\n",
              static_cast<unsigned long long>(params), static_cast<unsigned long long>(flops), mean, median, n);
  return kOk;
}

// ------------------------------------------------------------ export-embed

struct ExportArgs {
  std::string ckpt, config, source_dir, target_dir, out;
  std::vector<std::string> overrides;
};

int cmd_export_embed(const ExportArgs& a) {
  const ModelConfig cfg = checkpoint_config(a.ckpt, a.config, a.overrides);
  print_config(cfg);
  require_dir(a.source_dir, "--source-dir");
  require_dir(a.target_dir, "--target-dir");
  if (a.out.empty()) throw UsageError("--out is required");
  Model model(cfg);
  model.load(a.ckpt);
  const Dataset source = load_split(a.source_dir);
  const Dataset target = load_split(a.target_dir);

  std::ofstream os = open_out(a.out);
  os << "id,domain";
  for (std::size_t d = 0; d < cfg.D; ++d) os << ",f" << d;
  os << '\n';
  autograd::NoGradGuard ng;
  auto dump = [&](const Dataset& ds, const char* domain) {
    for (const auto& s : ds.samples()) {
      const Tensor f = model.encode({model.scan_single(s.partial)});  // [1, D, G]
      const Tensor pooled = ops::mean(f, 2);
      os << s.category << '/' << s.id << ',' << domain;
      for (double v : pooled.data()) os << ',' << fmt(v);
      os << '\n';
    }
  };
  dump(source, "source");
  dump(target, "target");

  // Same-index patch center distance, shared grid vs per-cloud grids.
  fs::path stat_path = a.out;
  stat_path.replace_extension(".cdps.csv");
  std::ofstream st = open_out(stat_path);
  st << "pair,source_id,target_id,cdps,independent\n";
  const std::size_t pairs = std::max(source.size(), target.size());
  double sum_joint = 0.0, sum_indep = 0.0;
  std::size_t wins = 0;
  for (std::size_t i = 0; i < pairs && !source.empty() && !target.empty(); ++i) {
    const Sample& s = source.samples()[i % source.size()];
    const Sample& t = target.samples()[i % target.size()];
    const auto joint = zorder::cdps(s.partial, t.partial, cfg.G, cfg.K, cfg.bits);
    const auto indep = zorder::independent_scan(s.partial, t.partial, cfg.G, cfg.K, cfg.bits);
    const double dj = zorder::mean_center_distance(joint.a, joint.b);
    const double di = zorder::mean_center_distance(indep.a, indep.b);
    sum_joint += dj;
    sum_indep += di;
    wins += dj < di;
    st << i << ',' << s.category << '/' << s.id << ',' << t.category << '/' << t.id << ',' << fmt(dj) << ','
       << fmt(di) << '\n';
  }
  const double n = static_cast<double>(std::max<std::size_t>(pairs, 1));
  std::printf("rows %zu\ncdps_mean_center_distance %.6g\nindependent_mean_center_distance %.6g\ncdps_closer %zu/%zu\n",
              source.size() + target.size(), sum_joint / n, sum_indep / n, wins, pairs);
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const DivergenceError*>(&e)) return kDivergence;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const VersionError*>(&e) ||
      dynamic_cast<const UsageError*>(&e)) {
    return kConfig;
  }
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kIo;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mpcc: domain-adaptive point cloud completion"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate the synthetic two-domain dataset");
  g->add_option("--out", gen.out, "Output root")->required();
  g->add_option("--n-per-category", gen.n_per_category, "Samples per category and split");
  g->add_option("--n-points", gen.n_points, "Points per cloud");
  g->add_option("--seed", gen.seed, "Generator seed (default: MPCC_SEED or 0)");
  g->add_flag("--same-domain", gen.same_domain, "Use the source DomainSpec for the target too");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train on a source split with an unlabeled target split");
  t->add_option("--config", tr.config, "key = value config file");
  t->add_option("--set", tr.overrides, "Config override key=value (repeatable)");
  t->add_option("--source-dir", tr.source_dir, "Source split directory");
  t->add_option("--target-dir", tr.target_dir, "Target split directory");
  t->add_option("--out", tr.out, "Checkpoint directory");
  t->add_flag("--dry-run", tr.dry_run, "Validate the config and exit");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a checkpoint on a split");
  e->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  e->add_option("--config", ev.config, "Config (default: config.txt next to the checkpoint)");
  e->add_option("--set", ev.overrides, "Config override key=value (repeatable)");
  e->add_option("--data-dir", ev.data_dir, "Split directory")->required();
  e->add_option("--metric", ev.metric, "cd, ucd or uhd")->check(CLI::IsMember({"cd", "ucd", "uhd"}));
  e->add_option("--out", ev.out, "Output CSV");

  ScanArgs sc;
  auto* s = app.add_subcommand("scan", "Z-order scan one cloud, or two under a shared grid");
  s->add_option("--input", sc.input, "First .xyz cloud")->required();
  s->add_option("--input2", sc.input2, "Second .xyz cloud");
  s->add_option("--g", sc.g, "Patch count");
  s->add_option("--k", sc.k, "Points per patch");
  s->add_option("--bits", sc.bits, "Grid bits per axis")->check(CLI::Range(1, 21));
  s->add_option("--out", sc.out, "Output directory")->required();

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Parameter count, analytic FLOPs and inference timing");
  b->add_option("--ckpt", be.ckpt, "Checkpoint file (default: fresh init)");
  b->add_option("--config", be.config, "Config file");
  b->add_option("--set", be.overrides, "Config override key=value (repeatable)");
  b->add_option("--points", be.points, "Input points per cloud");
  b->add_option("--batch", be.batch, "Clouds per forward");
  b->add_option("--reps", be.reps, "Timed repetitions");
  b->add_option("--out", be.out, "Directory for bench.csv and bench_timing.csv");

  ExportArgs ex;
  auto* x = app.add_subcommand("export-embed", "Export pooled encoder features per sample");
  x->add_option("--ckpt", ex.ckpt, "Checkpoint file")->required();
  x->add_option("--config", ex.config, "Config (default: config.txt next to the checkpoint)");
  x->add_option("--set", ex.overrides, "Config override key=value (repeatable)");
  x->add_option("--source-dir", ex.source_dir, "Source split directory")->required();
  x->add_option("--target-dir", ex.target_dir, "Target split directory")->required();
  x->add_option("--out", ex.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kConfig;
  }

  try {
    if (*g) return cmd_gen_data(gen);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*s) return cmd_scan(sc);
    if (*b) return cmd_bench(be);
    if (*x) return cmd_export_embed(ex);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code_for(err);
  }
  return kOk;
}
