#pragma once

#include <cstddef>
#include <vector>

#include "mpcc/tensor.hpp"

namespace mpcc::ops {

inline constexpr double kEps = 1e-8;

// Dense algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
/// x[..., in] * w[in, out] + bias[out]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias = {});

// Elementwise binary ops. Broadcasting is limited to a scalar operand or an
// operand whose shape is a trailing suffix of the other's shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor neg(const Tensor& a);

// Elementwise unary ops.
Tensor exp(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor square(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor abs(const Tensor& a);

// Reductions along one axis (the axis is removed).
Tensor sum(const Tensor& t, std::size_t axis);
Tensor mean(const Tensor& t, std::size_t axis);
/// Gradient goes to the first maximal element along the axis.
Tensor max(const Tensor& t, std::size_t axis);
Tensor sum_all(const Tensor& t);
Tensor mean_all(const Tensor& t);

// Layout.
Tensor reshape(const Tensor& t, Shape shape);
/// Output axis i is input axis perm[i].
Tensor permute(const Tensor& t, const std::vector<std::size_t>& perm);
Tensor transpose(const Tensor& t, std::size_t axis_a, std::size_t axis_b);
/// Inserts a new axis at `axis` holding `count` copies of the input.
Tensor broadcast_axis(const Tensor& t, std::size_t axis, std::size_t count);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
std::vector<Tensor> split(const Tensor& t, std::size_t sections, std::size_t axis);

/// Depthwise 1D convolution over the last axis of x[B, D, G] with zero
/// "same" padding; kernel is [D, W] with odd W.
Tensor dwconv1d(const Tensor& x, const Tensor& kernel);

/// <a, b> / (max(|a|, eps) * max(|b|, eps)) along `axis`, clamped to [-1, 1].
Tensor cosine_sim(const Tensor& a, const Tensor& b, std::size_t axis, double eps = kEps);

/// Mean squared difference over every element.
Tensor mse(const Tensor& a, const Tensor& b);

}  // namespace mpcc::ops
