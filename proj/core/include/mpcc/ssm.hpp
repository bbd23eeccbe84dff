#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mpcc/checkpoint.hpp"
#include "mpcc/rng.hpp"
#include "mpcc/tensor.hpp"

namespace mpcc::ssm {

inline constexpr std::size_t kConvWidth = 3;

struct BlockDims {
  std::size_t d_model = 128;
  std::size_t d_inner = 256;
  std::size_t n_state = 16;
  std::size_t dt_rank = 8;
};

/// Learnable state of one Mamba-style block.
struct SsmBlockParams {
  Tensor in_proj;      // [D, Di]
  Tensor gate_proj;    // [D, Di]
  Tensor conv_kernel;  // [Di, W]
  Tensor a_log;        // [Di, N]; A = -exp(a_log)
  Tensor delta_down;   // [Di, R]
  Tensor delta_up;     // [R, Di]
  Tensor delta_bias;   // [Di]
  Tensor b_proj;       // [Di, N]
  Tensor c_proj;       // [Di, N]
  Tensor skip_d;       // [Di]
  Tensor out_proj;     // [Di, D]

  BlockDims dims() const;
  void append_named(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

SsmBlockParams init_block(const BlockDims& dims, Rng& rng);

/// Selective scan over x[B, L, Di]:
///   h_t = exp(delta_t * A) * h_{t-1} + delta_t * B_t * x_t,   h_0 = 0
///   y_t = <C_t, h_t> + skip * x_t
/// delta[B, L, Di] must be positive; a[Di, N]; b_seq, c_seq [B, L, N]; skip [Di].
Tensor selective_scan(const Tensor& x, const Tensor& delta, const Tensor& a, const Tensor& b_seq,
                      const Tensor& c_seq, const Tensor& skip);

/// Residual block over tokens x[B, G, D]:
///   u = SiLU(dwconv(x W_in)); y = scan(u, ...); out = x + (y * SiLU(x W_gate)) W_out
Tensor mamba_block(const Tensor& x, const SsmBlockParams& p);

}  // namespace mpcc::ssm
