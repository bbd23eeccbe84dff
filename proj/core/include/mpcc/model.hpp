#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "mpcc/alignment.hpp"
#include "mpcc/checkpoint.hpp"
#include "mpcc/config.hpp"
#include "mpcc/point_cloud.hpp"
#include "mpcc/ssm.hpp"
#include "mpcc/tensor.hpp"
#include "mpcc/zorder.hpp"

namespace mpcc {

struct ModelParams {
  // Per-patch PointNet: 3 -> D/2 -> D, max over the K points.
  Tensor embed_w1, embed_b1, embed_w2, embed_b2;
  std::vector<ssm::SsmBlockParams> blocks;
  Tensor spatial_kernel;  // [D, 3], shared by both domains
  align::AlphaMlp alpha;
  // Coarse head: global feature -> hidden -> coarse_points * 3.
  Tensor coarse_w1, coarse_b1, coarse_w2, coarse_b2;
  // Folding head on [global, grid seed, coarse point].
  Tensor fold_wg, fold_ws, fold_wc, fold_b1, fold_w2, fold_b2, fold_w3, fold_b3;

  std::vector<NamedTensor> named() const;
};

/// Sinusoidal encoding of patch centers, [G, D] per patch set.
std::vector<double> center_encoding(const std::vector<Point3>& centers, std::size_t d);

/// Alignment taps applied to a pair of [B, D, G] feature maps.
struct TapResult {
  Tensor x_s, x_t;
  Tensor l_sp, l_ch;  // undefined when the corresponding module is off
};

struct TrainOutput {
  Tensor pred_s;  // [B, n_out, 3]
  Tensor loss_cd, l_sp, l_ch, total;
  align::LossBreakdown breakdown;
};

struct InferOutput {
  std::vector<PointCloud> completed;
  Tensor features;  // [B, D, G] encoder output
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const ModelParams& params() const { return params_; }
  std::vector<NamedTensor> named_parameters() const { return params_.named(); }
  std::size_t parameter_count() const;

  /// Scans one cloud alone (own grid) or a pair under the configured policy.
  zorder::PatchSet scan_single(const PointCloud& c) const;
  zorder::CdpsResult scan_pair(const PointCloud& source, const PointCloud& target) const;

  Tensor embed_patches(const std::vector<zorder::PatchSet>& patches) const;  // [B, D, G]
  Tensor run_block(std::size_t i, const Tensor& features) const;            // [B, D, G] -> same
  TapResult apply_taps(const Tensor& x_s, const Tensor& x_t) const;
  Tensor decode(const Tensor& features) const;                              // [B, n_out, 3]

  /// Paired training forward: source partials with ground truth, plus target
  /// partials. When `compute_alignment` is false the target is never read and
  /// the alignment branch is skipped.
  TrainOutput forward_train(const std::vector<const PointCloud*>& source,
                            const std::vector<const PointCloud*>& source_gt,
                            const std::vector<const PointCloud*>& target, bool compute_alignment) const;

  /// Inference on target-style partials: own-grid scan, identity alignment.
  InferOutput forward_infer(const std::vector<const PointCloud*>& partials) const;

  /// Encoder features only ([B, D, G]), no alignment.
  Tensor encode(const std::vector<zorder::PatchSet>& patches) const;

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  ModelConfig cfg_;
  ModelParams params_;
  Tensor fold_seeds_;  // [n_out, 2], constant
};

}  // namespace mpcc
