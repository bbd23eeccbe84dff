#include "mpcc/flops.hpp"

#include "mpcc/alignment.hpp"
#include "mpcc/ssm.hpp"

namespace mpcc {

std::uint64_t analytic_param_count(const ModelConfig& cfg) {
  const std::uint64_t D = cfg.D, H1 = cfg.D / 2, Di = cfg.d_inner(), N = cfg.n_state, R = cfg.dt_rank();
  const std::uint64_t W = ssm::kConvWidth, H = cfg.hidden, F = cfg.fold_hidden, C3 = 3 * cfg.coarse_points;
  const std::uint64_t embed = 3 * H1 + H1 + H1 * D + D;
  // in, gate, out projections + conv + A + delta path + B/C projections + skip
  const std::uint64_t block = 3 * D * Di + Di * W + Di * N + 2 * Di * R + Di + 2 * Di * N + Di;
  const std::uint64_t spatial = D * align::kSpatialKernelWidth;
  const std::uint64_t alpha = 2 * D * D + D + D + 1;
  const std::uint64_t coarse = D * H + H + H * C3 + C3;
  const std::uint64_t fold = (D + 5) * F + F + F * F + F + 3 * F + 3;
  return embed + cfg.n_blocks * block + spatial + alpha + coarse + fold;
}

std::uint64_t forward_flops(const ModelConfig& cfg) {
  const std::uint64_t G = cfg.G, K = cfg.K, P = G * K;
  const std::uint64_t D = cfg.D, H1 = cfg.D / 2, Di = cfg.d_inner(), N = cfg.n_state, R = cfg.dt_rank();
  const std::uint64_t W = ssm::kConvWidth, H = cfg.hidden, F = cfg.fold_hidden;
  const std::uint64_t C = cfg.coarse_points, n_out = cfg.n_points_out();

  // Patch embedding: centering, 3 -> D/2 -> D shared MLP, max over K, position code.
  const std::uint64_t embed = 3 * P + (2 * P * 3 * H1 + 2 * P * H1) + (2 * P * H1 * D + P * D) + P * D + G * D;

  // One residual selective-scan block over L = G tokens.
  const std::uint64_t block = 2 * G * D * Di            // in_proj
                              + 2 * G * Di * W + G * Di  // conv + SiLU
                              + 2 * G * Di * R + 2 * G * R * Di + 2 * G * Di  // delta path + softplus
                              + 4 * G * Di * N          // B and C projections
                              + 2 * Di * N              // A = -exp(a_log)
                              + G * Di * (8 * N + 2)    // recurrence + readout + skip
                              + 2 * G * D * Di + G * Di  // gate projection + SiLU
                              + G * Di                   // gating product
                              + 2 * G * Di * D + G * D;  // out_proj + residual

  const std::uint64_t decoder = G * D                                       // global max
                                + 2 * D * H + 2 * H + 2 * H * 3 * C + 3 * C  // coarse head
                                + 2 * D * F + 4 * n_out * F + n_out * F      // global and seed terms
                                + n_out * F + 6 * n_out * F + n_out * F + n_out * F  // anchors, add, SiLU
                                + 2 * n_out * F * F + 2 * n_out * F          // second layer + SiLU
                                + 6 * n_out * F + 3 * n_out + 3 * n_out;     // offsets + anchor add

  return embed + cfg.n_blocks * block + decoder;
}

}  // namespace mpcc
