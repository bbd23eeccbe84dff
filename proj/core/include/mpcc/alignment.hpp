#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mpcc/checkpoint.hpp"
#include "mpcc/rng.hpp"
#include "mpcc/tensor.hpp"

namespace mpcc::align {

inline constexpr std::size_t kSpatialKernelWidth = 3;

/// Cross-domain spatial alignment outputs. Features are [B, D, G].
struct SpatialAlignOut {
  Tensor d_s, d_t;          // depthwise-convolved features
  Tensor w_spatial;         // [B, G] per-patch cosine similarity
  Tensor x_s_mod, x_t_mod;  // modulated features (inputs when not training)
  Tensor l_sp;              // scalar
};

/// Cross-domain channel alignment outputs.
struct ChannelAlignOut {
  Tensor g_s, g_t;              // [B, D] patch-pooled features
  Tensor alpha;                 // [B, 1] alignment strength
  Tensor x_s_mix, x_t_mix;      // [B, D, G] segment-interleaved features
  Tensor w_channel;             // [B, G]
  Tensor w_channel_adapted;     // [B, G] alpha * w + (1 - alpha)
  Tensor f_s_mod, f_t_mod;      // modulated features (inputs when not training)
  Tensor l_ch;                  // scalar
};

/// Alignment-strength estimator: sigmoid(W2 softplus(W1 z + b1) + b2) with
/// the order-invariant input z = [g_s + g_t, |g_s - g_t|].
struct AlphaMlp {
  Tensor w1;  // [2D, D]
  Tensor b1;  // [D]
  Tensor w2;  // [D, 1]
  Tensor b2;  // [1]

  void append_named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

AlphaMlp init_alpha_mlp(std::size_t d, Rng& rng);
Tensor init_spatial_kernel(std::size_t d, Rng& rng);

SpatialAlignOut cdsa(const Tensor& x_s, const Tensor& x_t, const Tensor& conv_kernel, bool train);

/// Segment interleave: returns {[s1, t2, s3, ...], [t1, s2, t3, ...]} split along axis 1.
std::pair<Tensor, Tensor> interleave_segments(const Tensor& x_s, const Tensor& x_t, std::size_t segments);

Tensor alpha_strength(const Tensor& g_s, const Tensor& g_t, const AlphaMlp& mlp);

ChannelAlignOut cdca(const Tensor& x_s, const Tensor& x_t, std::size_t segments, const AlphaMlp& mlp,
                     bool train);

struct LossBreakdown {
  double loss_cd = 0.0;
  double l_sp = 0.0;
  double l_ch = 0.0;
  double total = 0.0;
};

/// loss_cd + lambda * l_sp + beta * l_ch. Components must be finite and >= 0.
LossBreakdown total_loss(double loss_cd, double l_sp, double l_ch, double lambda, double beta);

/// Differentiable form of total_loss; undefined l_sp / l_ch count as zero.
Tensor total_loss(const Tensor& loss_cd, const Tensor& l_sp, const Tensor& l_ch, double lambda,
                  double beta);

}  // namespace mpcc::align
