#include "mpcc/model.hpp"

#include <cmath>
#include <numbers>

#include "mpcc/error.hpp"
#include "mpcc/metrics.hpp"
#include "mpcc/ops.hpp"
#include "mpcc/rng.hpp"

namespace mpcc {

namespace {

Tensor uniform_param(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Folding seeds on a rows x cols grid in [-0.05, 0.05]^2, repeated for every
// coarse point: row j = c * (rows * cols) + f.
Tensor make_fold_seeds(const ModelConfig& cfg) {
  const std::size_t fp = cfg.fold_points();
  std::vector<double> seeds;
  seeds.reserve(cfg.n_points_out() * 2);
  auto lin = [](std::size_t i, std::size_t n) {
    return n == 1 ? 0.0 : -0.05 + 0.1 * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  for (std::size_t c = 0; c < cfg.coarse_points; ++c) {
    for (std::size_t f = 0; f < fp; ++f) {
      seeds.push_back(lin(f / cfg.fold_cols, cfg.fold_rows));
      seeds.push_back(lin(f % cfg.fold_cols, cfg.fold_cols));
    }
  }
  return Tensor::from({cfg.n_points_out(), 2}, std::move(seeds));
}

void add_defined(Tensor& acc, const Tensor& v) {
  if (!v.defined()) return;
  acc = acc.defined() ? ops::add(acc, v) : v;
}

}  // namespace

std::vector<NamedTensor> ModelParams::named() const {
  std::vector<NamedTensor> out{{"embed.w1", embed_w1},
                               {"embed.b1", embed_b1},
                               {"embed.w2", embed_w2},
                               {"embed.b2", embed_b2}};
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].append_named("block" + std::to_string(i) + ".", out);
  out.push_back({"cdsa.kernel", spatial_kernel});
  alpha.append_named("cdca.", out);
  for (auto& [name, t] : std::initializer_list<std::pair<const char*, const Tensor*>>{
           {"decoder.coarse_w1", &coarse_w1}, {"decoder.coarse_b1", &coarse_b1},
           {"decoder.coarse_w2", &coarse_w2}, {"decoder.coarse_b2", &coarse_b2},
           {"decoder.fold_wg", &fold_wg},     {"decoder.fold_ws", &fold_ws},
           {"decoder.fold_wc", &fold_wc},     {"decoder.fold_b1", &fold_b1},
           {"decoder.fold_w2", &fold_w2},     {"decoder.fold_b2", &fold_b2},
           {"decoder.fold_w3", &fold_w3},     {"decoder.fold_b3", &fold_b3}}) {
    out.push_back({name, *t});
  }
  return out;
}

std::vector<double> center_encoding(const std::vector<Point3>& centers, std::size_t d) {
  // Channel j encodes axis j % 3 with sin (even j / 3) or cos (odd j / 3) at
  // frequency band (j / 3) / 2; bands span pi .. 64 pi geometrically.
  const std::size_t bands = (d + 5) / 6;
  std::vector<double> out(centers.size() * d);
  for (std::size_t g = 0; g < centers.size(); ++g) {
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t m = j / 3;
      const std::size_t band = m / 2;
      const double t = bands > 1 ? static_cast<double>(band) / static_cast<double>(bands - 1) : 0.0;
      const double omega = std::numbers::pi * std::pow(64.0, t);
      const double v = omega * centers[g][j % 3];
      out[g * d + j] = (m % 2 == 0) ? std::sin(v) : std::cos(v);
    }
  }
  return out;
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const std::size_t D = cfg_.D, H1 = D / 2, H = cfg_.hidden, F = cfg_.fold_hidden;
  const std::size_t C3 = cfg_.coarse_points * 3;
  auto& p = params_;
  p.embed_w1 = uniform_param({3, H1}, 3, rng);
  p.embed_b1 = uniform_param({H1}, 3, rng);
  p.embed_w2 = uniform_param({H1, D}, H1, rng);
  p.embed_b2 = uniform_param({D}, H1, rng);
  const ssm::BlockDims dims{D, cfg_.d_inner(), cfg_.n_state, cfg_.dt_rank()};
  for (std::size_t i = 0; i < cfg_.n_blocks; ++i) p.blocks.push_back(ssm::init_block(dims, rng));
  p.spatial_kernel = align::init_spatial_kernel(D, rng);
  p.alpha = align::init_alpha_mlp(D, rng);
  p.coarse_w1 = uniform_param({D, H}, D, rng);
  p.coarse_b1 = uniform_param({H}, D, rng);
  p.coarse_w2 = uniform_param({H, C3}, H, rng);
  p.coarse_b2 = uniform_param({C3}, H, rng);
  const std::size_t fold_in = D + 5;
  p.fold_wg = uniform_param({D, F}, fold_in, rng);
  p.fold_ws = uniform_param({2, F}, fold_in, rng);
  p.fold_wc = uniform_param({3, F}, fold_in, rng);
  p.fold_b1 = uniform_param({F}, fold_in, rng);
  p.fold_w2 = uniform_param({F, F}, F, rng);
  p.fold_b2 = uniform_param({F}, F, rng);
  p.fold_w3 = uniform_param({F, 3}, F, rng);
  p.fold_b3 = uniform_param({3}, F, rng);
  fold_seeds_ = make_fold_seeds(cfg_);
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& nt : named_parameters()) n += nt.tensor.numel();
  return n;
}

zorder::PatchSet Model::scan_single(const PointCloud& c) const {
  validate_cloud(c, "scan");
  return zorder::partition(zorder::serialize(c, zorder::own_grid(c, cfg_.bits)), c, cfg_.G, cfg_.K);
}

zorder::CdpsResult Model::scan_pair(const PointCloud& source, const PointCloud& target) const {
  return cfg_.use_cdps ? zorder::cdps(source, target, cfg_.G, cfg_.K, cfg_.bits)
                       : zorder::independent_scan(source, target, cfg_.G, cfg_.K, cfg_.bits);
}

Tensor Model::embed_patches(const std::vector<zorder::PatchSet>& patches) const {
  if (patches.empty()) throw UsageError("embed_patches: empty batch");
  const std::size_t B = patches.size(), G = patches[0].G, K = patches[0].K, D = cfg_.D;
  std::vector<double> rel;
  std::vector<double> pe;
  rel.reserve(B * G * K * 3);
  pe.reserve(B * G * D);
  for (const auto& ps : patches) {
    if (ps.G != G || ps.K != K) throw DimensionError("embed_patches: patch sets differ in G or K");
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t k = 0; k < K; ++k) {
        for (int a = 0; a < 3; ++a) rel.push_back(ps.at(g, k)[a] - ps.centers[g][a]);
      }
    }
    auto enc = center_encoding(ps.centers, D);
    pe.insert(pe.end(), enc.begin(), enc.end());
  }
  using namespace ops;
  const auto& p = params_;
  Tensor x = Tensor::from({B, G, K, 3}, std::move(rel));
  Tensor h = silu(linear(x, p.embed_w1, p.embed_b1));
  h = max(linear(h, p.embed_w2, p.embed_b2), 2);  // [B, G, D]
  h = add(h, Tensor::from({B, G, D}, std::move(pe)));
  return transpose(h, 1, 2);
}

Tensor Model::run_block(std::size_t i, const Tensor& features) const {
  return ops::transpose(ssm::mamba_block(ops::transpose(features, 1, 2), params_.blocks.at(i)), 1, 2);
}

TapResult Model::apply_taps(const Tensor& x_s, const Tensor& x_t) const {
  TapResult r{x_s, x_t, {}, {}};
  const bool modulate = cfg_.modulate_forward;
  if (cfg_.use_cdsa) {
    auto sp = align::cdsa(r.x_s, r.x_t, params_.spatial_kernel, modulate);
    r.x_s = sp.x_s_mod;
    r.x_t = sp.x_t_mod;
    r.l_sp = sp.l_sp;
  }
  if (cfg_.use_cdca) {
    auto ch = align::cdca(r.x_s, r.x_t, cfg_.S, params_.alpha, modulate);
    r.x_s = ch.f_s_mod;
    r.x_t = ch.f_t_mod;
    r.l_ch = ch.l_ch;
  }
  return r;
}

Tensor Model::decode(const Tensor& features) const {
  using namespace ops;
  const auto& p = params_;
  const std::size_t B = features.dim(0), C = cfg_.coarse_points, FP = cfg_.fold_points();
  const std::size_t n_out = cfg_.n_points_out();
  const Tensor global = max(features, 2);  // [B, D]
  Tensor coarse = linear(silu(linear(global, p.coarse_w1, p.coarse_b1)), p.coarse_w2, p.coarse_b2);
  coarse = reshape(coarse, {B, C, 3});
  const Tensor anchors = reshape(broadcast_axis(coarse, 2, FP), {B, n_out, 3});

  Tensor h = broadcast_axis(matmul(global, p.fold_wg), 1, n_out);  // [B, n_out, F]
  h = add(h, add(matmul(fold_seeds_, p.fold_ws), p.fold_b1));      // [n_out, F] broadcast
  h = silu(add(h, linear(anchors, p.fold_wc)));
  h = silu(linear(h, p.fold_w2, p.fold_b2));
  return add(anchors, linear(h, p.fold_w3, p.fold_b3));
}

Tensor Model::encode(const std::vector<zorder::PatchSet>& patches) const {
  Tensor x = embed_patches(patches);
  for (std::size_t i = 0; i < cfg_.n_blocks; ++i) x = run_block(i, x);
  return x;
}

TrainOutput Model::forward_train(const std::vector<const PointCloud*>& source,
                                 const std::vector<const PointCloud*>& source_gt,
                                 const std::vector<const PointCloud*>& target, bool compute_alignment) const {
  if (source.empty()) throw UsageError("forward_train: empty source batch");
  if (source_gt.size() != source.size()) {
    throw UsageError("forward_train: training requires a ground-truth cloud for every source sample");
  }
  for (const auto* gt : source_gt) {
    if (gt == nullptr || gt->empty()) throw UsageError("forward_train: missing source ground truth");
  }
  if (compute_alignment && target.size() != source.size()) {
    throw UsageError("forward_train: alignment needs one target cloud per source cloud");
  }

  std::vector<zorder::PatchSet> src_patches, tgt_patches;
  for (std::size_t b = 0; b < source.size(); ++b) {
    if (compute_alignment) {
      auto scan = scan_pair(*source[b], *target[b]);
      src_patches.push_back(std::move(scan.a));
      tgt_patches.push_back(std::move(scan.b));
    } else {
      src_patches.push_back(scan_single(*source[b]));
    }
  }

  Tensor x_s = embed_patches(src_patches);
  Tensor x_t = compute_alignment ? embed_patches(tgt_patches) : Tensor{};
  Tensor l_sp, l_ch;
  std::size_t taps = 0;
  for (std::size_t i = 0; i < cfg_.n_blocks; ++i) {
    x_s = run_block(i, x_s);
    if (!compute_alignment) continue;
    x_t = run_block(i, x_t);
    if (cfg_.tap_every_block || i + 1 == cfg_.n_blocks) {
      auto tap = apply_taps(x_s, x_t);
      x_s = tap.x_s;
      x_t = tap.x_t;
      add_defined(l_sp, tap.l_sp);
      add_defined(l_ch, tap.l_ch);
      ++taps;
    }
  }
  if (taps > 1) {
    if (l_sp.defined()) l_sp = ops::scale(l_sp, 1.0 / static_cast<double>(taps));
    if (l_ch.defined()) l_ch = ops::scale(l_ch, 1.0 / static_cast<double>(taps));
  }

  TrainOutput out;
  out.pred_s = decode(x_s);
  const std::size_t B = source.size(), n_out = cfg_.n_points_out();
  auto preds = ops::split(out.pred_s, B, 0);
  Tensor cd;
  for (std::size_t b = 0; b < B; ++b) {
    add_defined(cd, metrics::chamfer_loss(ops::reshape(preds[b], {n_out, 3}), *source_gt[b]));
  }
  out.loss_cd = ops::scale(cd, 1.0 / static_cast<double>(B));
  out.l_sp = l_sp;
  out.l_ch = l_ch;
  out.total = align::total_loss(out.loss_cd, l_sp, l_ch, cfg_.lambda, cfg_.beta);
  out.breakdown = align::total_loss(out.loss_cd.item(), l_sp.defined() ? l_sp.item() : 0.0,
                                    l_ch.defined() ? l_ch.item() : 0.0, cfg_.lambda, cfg_.beta);
  return out;
}

InferOutput Model::forward_infer(const std::vector<const PointCloud*>& partials) const {
  if (partials.empty()) throw UsageError("forward_infer: empty batch");
  std::vector<zorder::PatchSet> patches;
  for (const auto* c : partials) patches.push_back(scan_single(*c));
  InferOutput out;
  out.features = encode(patches);
  const Tensor pred = decode(out.features);
  const std::size_t n_out = cfg_.n_points_out();
  auto d = pred.data();
  for (std::size_t b = 0; b < partials.size(); ++b) {
    PointCloud c;
    c.points.resize(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
      const std::size_t o = (b * n_out + i) * 3;
      c.points[i] = {d[o], d[o + 1], d[o + 2]};
    }
    out.completed.push_back(std::move(c));
  }
  return out;
}

void Model::save(const std::filesystem::path& path) const { save_checkpoint(path, named_parameters()); }

void Model::load(const std::filesystem::path& path) {
  auto target = named_parameters();
  restore_into(load_checkpoint(path), target);
}

}  // namespace mpcc
