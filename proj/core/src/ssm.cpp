#include "mpcc/ssm.hpp"

#include <cmath>

#include "mpcc/error.hpp"
#include "mpcc/ops.hpp"

namespace mpcc::ssm {

namespace {

Tensor uniform_param(Shape shape, double bound, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

void expect_shape(const Tensor& t, const Shape& s, const char* what) {
  if (t.shape() != s) {
    throw DimensionError(std::string("selective_scan: ") + what + " has shape " +
                         shape_str(t.shape()) + ", expected " + shape_str(s));
  }
}

}  // namespace

BlockDims SsmBlockParams::dims() const {
  return {in_proj.dim(0), in_proj.dim(1), a_log.dim(1), delta_down.dim(1)};
}

void SsmBlockParams::append_named(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + "in_proj", in_proj});
  out.push_back({prefix + "gate_proj", gate_proj});
  out.push_back({prefix + "conv_kernel", conv_kernel});
  out.push_back({prefix + "a_log", a_log});
  out.push_back({prefix + "delta_down", delta_down});
  out.push_back({prefix + "delta_up", delta_up});
  out.push_back({prefix + "delta_bias", delta_bias});
  out.push_back({prefix + "b_proj", b_proj});
  out.push_back({prefix + "c_proj", c_proj});
  out.push_back({prefix + "skip_d", skip_d});
  out.push_back({prefix + "out_proj", out_proj});
}

SsmBlockParams init_block(const BlockDims& dims, Rng& rng) {
  const std::size_t D = dims.d_model, Di = dims.d_inner, N = dims.n_state, R = dims.dt_rank;
  if (D == 0 || Di == 0 || N == 0 || R == 0) throw ConfigError("ssm block dimensions must be positive");
  SsmBlockParams p;
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(D));
  const double inner_bound = 1.0 / std::sqrt(static_cast<double>(Di));
  p.in_proj = uniform_param({D, Di}, in_bound, rng);
  p.gate_proj = uniform_param({D, Di}, in_bound, rng);
  p.conv_kernel = uniform_param({Di, kConvWidth}, 1.0 / std::sqrt(static_cast<double>(kConvWidth)), rng);

  std::vector<double> a_log(Di * N);
  for (std::size_t d = 0; d < Di; ++d)
    for (std::size_t n = 0; n < N; ++n) a_log[d * N + n] = std::log(static_cast<double>(n + 1));
  p.a_log = Tensor::from({Di, N}, std::move(a_log), true);

  p.delta_down = uniform_param({Di, R}, inner_bound, rng);
  p.delta_up = uniform_param({R, Di}, 1.0 / std::sqrt(static_cast<double>(R)), rng);
  // Step sizes start log-uniform in [1e-3, 0.1]; the bias is softplus^-1 of that.
  std::vector<double> bias(Di);
  for (auto& b : bias) {
    const double dt = std::exp(rng.uniform(std::log(1e-3), std::log(1e-1)));
    b = std::log(std::expm1(dt));
  }
  p.delta_bias = Tensor::from({Di}, std::move(bias), true);

  p.b_proj = uniform_param({Di, N}, inner_bound, rng);
  p.c_proj = uniform_param({Di, N}, inner_bound, rng);
  p.skip_d = Tensor::full({Di}, 1.0, true);
  p.out_proj = uniform_param({Di, D}, inner_bound, rng);
  return p;
}

Tensor selective_scan(const Tensor& x, const Tensor& delta, const Tensor& a, const Tensor& b_seq,
                      const Tensor& c_seq, const Tensor& skip) {
  if (x.rank() != 3) throw DimensionError("selective_scan: x must be [B, L, Di]");
  const std::size_t B = x.dim(0), L = x.dim(1), Di = x.dim(2);
  if (a.rank() != 2 || a.dim(0) != Di) throw DimensionError("selective_scan: A must be [Di, N]");
  const std::size_t N = a.dim(1);
  expect_shape(delta, {B, L, Di}, "delta");
  expect_shape(b_seq, {B, L, N}, "B");
  expect_shape(c_seq, {B, L, N}, "C");
  expect_shape(skip, {Di}, "skip");

  auto xs = x.data();
  auto dt = delta.data();
  auto av = a.data();
  auto bs = b_seq.data();
  auto cs = c_seq.data();
  auto sk = skip.data();
  for (double v : dt) {
    if (!(v > 0.0)) throw DomainError("selective_scan: step sizes must be positive");
  }

  const bool keep = autograd::enabled() && (x.requires_grad() || delta.requires_grad() || a.requires_grad() ||
                                            b_seq.requires_grad() || c_seq.requires_grad() || skip.requires_grad());
  std::vector<double> y(B * L * Di);
  // States are kept for the backward pass only, laid out [B, Di, L, N] so one
  // channel's history is contiguous.
  std::vector<double> hs(keep ? B * Di * L * N : 0);
  std::vector<double> h(N);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t d = 0; d < Di; ++d) {
      std::fill(h.begin(), h.end(), 0.0);
      const double* arow = av.data() + d * N;
      double* saved = keep ? hs.data() + (b * Di + d) * L * N : nullptr;
      for (std::size_t t = 0; t < L; ++t) {
        const std::size_t bt = b * L + t;
        const double step = dt[bt * Di + d];
        const double xv = xs[bt * Di + d];
        const double* bt_b = bs.data() + bt * N;
        const double* bt_c = cs.data() + bt * N;
        double acc = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
          h[n] = std::exp(step * arow[n]) * h[n] + step * bt_b[n] * xv;
          acc += bt_c[n] * h[n];
        }
        if (saved) std::copy(h.begin(), h.end(), saved + t * N);
        y[bt * Di + d] = acc + sk[d] * xv;
      }
    }
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DomainError("non-finite value produced by selective_scan");
  }

  return autograd::make_result(
      "selective_scan", {B, L, Di}, std::move(y), {x, delta, a, b_seq, c_seq, skip},
      [B, L, Di, N, hs = std::move(hs)](detail::Node& self) {
        const auto& xs = self.inputs[0]->data;
        const auto& dt = self.inputs[1]->data;
        const auto& av = self.inputs[2]->data;
        const auto& bs = self.inputs[3]->data;
        const auto& cs = self.inputs[4]->data;
        const auto& sk = self.inputs[5]->data;
        auto grad_of = [&](std::size_t i) -> double* {
          return self.inputs[i]->requires_grad ? self.inputs[i]->ensure_grad().data() : nullptr;
        };
        double* gx = grad_of(0);
        double* gdt = grad_of(1);
        double* ga = grad_of(2);
        double* gb = grad_of(3);
        double* gc = grad_of(4);
        double* gsk = grad_of(5);
        const auto& gy = self.grad;

        std::vector<double> carry(N);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t d = 0; d < Di; ++d) {
            std::fill(carry.begin(), carry.end(), 0.0);
            const double* arow = av.data() + d * N;
            for (std::size_t t = L; t-- > 0;) {
              const std::size_t bt = b * L + t;
              const std::size_t i = bt * Di + d;
              const double dy = gy[i];
              const double step = dt[i];
              const double xv = xs[i];
              const double* h_t = hs.data() + ((b * Di + d) * L + t) * N;
              const double* h_prev = t > 0 ? h_t - N : nullptr;
              if (gsk) gsk[d] += dy * xv;
              double dx = dy * sk[d];
              double dstep = 0.0;
              for (std::size_t n = 0; n < N; ++n) {
                const double g = dy * cs[bt * N + n] + carry[n];
                if (gc) gc[bt * N + n] += dy * h_t[n];
                const double abar = std::exp(step * arow[n]);
                const double hp = h_prev ? h_prev[n] : 0.0;
                const double dabar = g * hp * abar;
                dstep += dabar * arow[n] + g * bs[bt * N + n] * xv;
                if (ga) ga[d * N + n] += dabar * step;
                if (gb) gb[bt * N + n] += g * step * xv;
                dx += g * step * bs[bt * N + n];
                carry[n] = g * abar;
              }
              if (gx) gx[i] += dx;
              if (gdt) gdt[i] += dstep;
            }
          }
        }
      });
}

Tensor mamba_block(const Tensor& x, const SsmBlockParams& p) {
  if (x.rank() != 3 || x.dim(2) != p.in_proj.dim(0)) {
    throw DimensionError("mamba_block: input " + shape_str(x.shape()) + " does not match width " +
                         std::to_string(p.in_proj.dim(0)));
  }
  using namespace ops;
  Tensor u = linear(x, p.in_proj);                                   // [B, G, Di]
  u = transpose(dwconv1d(transpose(u, 1, 2), p.conv_kernel), 1, 2);  // conv along G
  u = silu(u);
  Tensor delta = softplus(linear(linear(u, p.delta_down), p.delta_up, p.delta_bias));
  Tensor a = neg(exp(p.a_log));
  Tensor y = selective_scan(u, delta, a, linear(u, p.b_proj), linear(u, p.c_proj), p.skip_d);
  Tensor gate = silu(linear(x, p.gate_proj));
  return add(x, linear(mul(y, gate), p.out_proj));
}

}  // namespace mpcc::ssm
