#include "mpcc/alignment.hpp"

#include <cmath>

#include "mpcc/error.hpp"
#include "mpcc/ops.hpp"

namespace mpcc::align {

namespace {

Tensor uniform_param(Shape shape, double bound, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

void check_pair(const Tensor& x_s, const Tensor& x_t, const char* what) {
  if (x_s.rank() != 3 || x_s.shape() != x_t.shape()) {
    throw DimensionError(std::string(what) + ": expected matching [B, D, G] features, got " +
                         shape_str(x_s.shape()) + " and " + shape_str(x_t.shape()));
  }
}

// w[B, G] -> [B, D, G]
Tensor over_channels(const Tensor& w, std::size_t d) { return ops::broadcast_axis(w, 1, d); }

void check_component(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) {
    throw InternalError(std::string("loss component ") + name + " must be finite and >= 0, got " +
                        std::to_string(v));
  }
}

}  // namespace

void AlphaMlp::append_named(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + "w1", w1});
  out.push_back({prefix + "b1", b1});
  out.push_back({prefix + "w2", w2});
  out.push_back({prefix + "b2", b2});
}

AlphaMlp init_alpha_mlp(std::size_t d, Rng& rng) {
  AlphaMlp m;
  const double b_in = 1.0 / std::sqrt(static_cast<double>(2 * d));
  const double b_hidden = 1.0 / std::sqrt(static_cast<double>(d));
  m.w1 = uniform_param({2 * d, d}, b_in, rng);
  m.b1 = uniform_param({d}, b_in, rng);
  m.w2 = uniform_param({d, 1}, b_hidden, rng);
  m.b2 = uniform_param({1}, b_hidden, rng);
  return m;
}

Tensor init_spatial_kernel(std::size_t d, Rng& rng) {
  return uniform_param({d, kSpatialKernelWidth}, 1.0 / std::sqrt(static_cast<double>(kSpatialKernelWidth)),
                       rng);
}

SpatialAlignOut cdsa(const Tensor& x_s, const Tensor& x_t, const Tensor& conv_kernel, bool train) {
  check_pair(x_s, x_t, "cdsa");
  using namespace ops;
  SpatialAlignOut out;
  out.d_s = dwconv1d(x_s, conv_kernel);
  out.d_t = dwconv1d(x_t, conv_kernel);
  out.w_spatial = cosine_sim(out.d_s, out.d_t, 1);
  const Tensor w = over_channels(out.w_spatial, x_s.dim(1));
  const Tensor s_mod = mul(x_s, w);
  const Tensor t_mod = mul(x_t, w);
  out.l_sp = mse(s_mod, t_mod);
  out.x_s_mod = train ? s_mod : x_s;
  out.x_t_mod = train ? t_mod : x_t;
  return out;
}

std::pair<Tensor, Tensor> interleave_segments(const Tensor& x_s, const Tensor& x_t, std::size_t segments) {
  check_pair(x_s, x_t, "interleave_segments");
  if (segments == 0 || x_s.dim(1) % segments != 0) {
    throw ConfigError("channel count D=" + std::to_string(x_s.dim(1)) +
                      " is not divisible by segment count S=" + std::to_string(segments));
  }
  auto s_parts = ops::split(x_s, segments, 1);
  auto t_parts = ops::split(x_t, segments, 1);
  std::vector<Tensor> s_mix, t_mix;
  for (std::size_t k = 0; k < segments; ++k) {
    // Even (0-based) segments keep their own domain, odd ones swap.
    const bool own = k % 2 == 0;
    s_mix.push_back(own ? s_parts[k] : t_parts[k]);
    t_mix.push_back(own ? t_parts[k] : s_parts[k]);
  }
  return {ops::concat(s_mix, 1), ops::concat(t_mix, 1)};
}

Tensor alpha_strength(const Tensor& g_s, const Tensor& g_t, const AlphaMlp& mlp) {
  using namespace ops;
  const Tensor z = concat({add(g_s, g_t), abs(sub(g_s, g_t))}, 1);
  const Tensor hidden = softplus(linear(z, mlp.w1, mlp.b1));
  return sigmoid(linear(hidden, mlp.w2, mlp.b2));
}

ChannelAlignOut cdca(const Tensor& x_s, const Tensor& x_t, std::size_t segments, const AlphaMlp& mlp,
                     bool train) {
  check_pair(x_s, x_t, "cdca");
  using namespace ops;
  const std::size_t B = x_s.dim(0), D = x_s.dim(1), G = x_s.dim(2);
  ChannelAlignOut out;
  out.g_s = mean(x_s, 2);
  out.g_t = mean(x_t, 2);
  out.alpha = alpha_strength(out.g_s, out.g_t, mlp);
  std::tie(out.x_s_mix, out.x_t_mix) = interleave_segments(x_s, x_t, segments);
  out.w_channel = cosine_sim(out.x_s_mix, out.x_t_mix, 1);
  // alpha * w + (1 - alpha) == 1 + alpha * (w - 1)
  const Tensor alpha_bg = broadcast_axis(reshape(out.alpha, {B}), 1, G);
  out.w_channel_adapted = add_scalar(mul(alpha_bg, add_scalar(out.w_channel, -1.0)), 1.0);
  const Tensor w = over_channels(out.w_channel_adapted, D);
  const Tensor s_mod = mul(x_s, w);
  const Tensor t_mod = mul(x_t, w);
  out.l_ch = mse(s_mod, t_mod);
  out.f_s_mod = train ? s_mod : x_s;
  out.f_t_mod = train ? t_mod : x_t;
  return out;
}

LossBreakdown total_loss(double loss_cd, double l_sp, double l_ch, double lambda, double beta) {
  check_component(loss_cd, "loss_cd");
  check_component(l_sp, "l_sp");
  check_component(l_ch, "l_ch");
  return {loss_cd, l_sp, l_ch, loss_cd + lambda * l_sp + beta * l_ch};
}

Tensor total_loss(const Tensor& loss_cd, const Tensor& l_sp, const Tensor& l_ch, double lambda,
                  double beta) {
  Tensor total = loss_cd;
  if (l_sp.defined()) total = ops::add(total, ops::scale(l_sp, lambda));
  if (l_ch.defined()) total = ops::add(total, ops::scale(l_ch, beta));
  return total;
}

}  // namespace mpcc::align
