#pragma once

#include <cstdint>

#include "mpcc/config.hpp"

namespace mpcc {

/// Closed-form number of learnable scalars for a config.
std::uint64_t analytic_param_count(const ModelConfig& cfg);

/// Analytic floating-point operations of one single-cloud inference forward
/// (batch 1). Counting rules are documented in bench.md: a multiply-add is
/// 2 FLOPs, every other elementwise op, comparison or transcendental is 1.
std::uint64_t forward_flops(const ModelConfig& cfg);

}  // namespace mpcc
