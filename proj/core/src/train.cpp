#include "mpcc/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "mpcc/error.hpp"
#include "mpcc/optim.hpp"
#include "mpcc/rng.hpp"

namespace mpcc {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

void dump_divergence(const fs::path& out_dir, const Model& model, std::size_t step,
                     const align::LossBreakdown& loss, const std::string& why) {
  if (out_dir.empty()) return;
  std::ofstream os(out_dir / "divergence_dump.txt", std::ios::trunc);
  os.precision(17);
  os << "step " << step << "\nreason " << why << "\nloss_cd " << loss.loss_cd << "\nl_sp " << loss.l_sp
     << "\nl_ch " << loss.l_ch << "\ntotal " << loss.total << "\n# tensor value_norm grad_norm\n";
  for (const auto& nt : model.named_parameters()) {
    double v = 0.0, g = 0.0;
    for (double x : nt.tensor.data()) v += x * x;
    if (nt.tensor.has_grad()) {
      for (double x : nt.tensor.grad()) g += x * x;
    }
    os << nt.name << ' ' << std::sqrt(v) << ' ' << std::sqrt(g) << '\n';
  }
}

}  // namespace

std::string loss_csv(const std::vector<LossRow>& rows) {
  std::string out = "step,loss_cd,l_sp,l_ch,total\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", r.step, r.loss.loss_cd, r.loss.l_sp,
                  r.loss.l_ch, r.loss.total);
    out += buf;
  }
  return out;
}

TrainResult train_loop(Model& model, const Dataset& source, const Dataset& target, const TrainOptions& opts) {
  const ModelConfig& cfg = model.config();
  if (source.empty()) throw UsageError("train_loop: source dataset is empty");
  const bool align_branch = opts.force_alignment_branch || !cfg.alignment_disabled();
  if (align_branch && target.empty()) throw UsageError("train_loop: target dataset is empty");
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    cfg.save(opts.out_dir / "config.txt");
  }

  AdamW optim(model.named_parameters(), {cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  Rng source_rng = Rng(cfg.seed).split(1);
  Rng target_rng = Rng(cfg.seed).split(2);

  // Target indices by category; built only when the target is actually used.
  std::map<std::string, std::vector<std::size_t>> target_by_category;
  if (align_branch && cfg.pair_by_category) {
    for (std::size_t i = 0; i < target.size(); ++i) target_by_category[target.samples()[i].category].push_back(i);
  }

  std::vector<std::size_t> perm(source.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;

  TrainResult result;
  bool stop = false;
  for (std::size_t epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[source_rng.below(i)]);
    for (std::size_t start = 0; start < perm.size() && !stop; start += cfg.batch) {
      const std::size_t end = std::min(perm.size(), start + cfg.batch);
      std::vector<const PointCloud*> src, gt, tgt;
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = source.get(perm[k]);
        if (!s.gt) throw UsageError("source sample " + s.category + "/" + s.id + " has no ground truth");
        src.push_back(&s.partial);
        gt.push_back(&*s.gt);
        if (align_branch) {
          std::size_t j = target_rng.below(target.size());
          if (cfg.pair_by_category) {
            auto it = target_by_category.find(s.category);
            if (it != target_by_category.end()) j = it->second[target_rng.below(it->second.size())];
          }
          tgt.push_back(&target.get(j).partial);
        }
      }

      const std::size_t step = result.steps + 1;
      TrainOutput out;
      try {
        out = model.forward_train(src, gt, tgt, align_branch);
        if (!std::isfinite(out.breakdown.total) || out.breakdown.total > kDivergenceThreshold) {
          throw DivergenceError("training diverged at step " + std::to_string(step) +
                                ": total loss " + std::to_string(out.breakdown.total));
        }
        out.total.backward();
      } catch (const DivergenceError& e) {
        dump_divergence(opts.out_dir, model, step, out.breakdown, e.what());
        throw;
      } catch (const DomainError& e) {
        dump_divergence(opts.out_dir, model, step, out.breakdown, e.what());
        throw DivergenceError("training diverged at step " + std::to_string(step) + ": " + e.what());
      }
      optim.step();

      LossRow row{step, out.breakdown};
      result.rows.push_back(row);
      result.steps = step;
      if (opts.on_step) opts.on_step(row);
      if (cfg.max_steps != 0 && result.steps >= cfg.max_steps) stop = true;
    }
    result.epochs = epoch;
    if (!opts.out_dir.empty() && epoch % cfg.ckpt_every == 0) {
      model.save(opts.out_dir / ("ckpt_epoch" + std::to_string(epoch) + ".mpcc"));
    }
  }

  if (!opts.out_dir.empty()) {
    model.save(opts.out_dir / "model.mpcc");
    write_text(opts.out_dir / "loss.csv", loss_csv(result.rows));
  }
  return result;
}

}  // namespace mpcc
