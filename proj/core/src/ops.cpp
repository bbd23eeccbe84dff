#include "mpcc/ops.hpp"

#include <algorithm>
#include <cmath>

#include "mpcc/error.hpp"

namespace mpcc::ops {

namespace {

using autograd::make_result;
using detail::Node;

bool wants(const Node& self, std::size_t i) { return self.inputs[i]->requires_grad; }

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError(std::string("non-finite value produced by ") + op);
  }
}

// Product of dims before `axis`, the axis itself, and dims after it.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape r = s;
  r.erase(r.begin() + static_cast<std::ptrdiff_t>(axis));
  return r;
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

template <class Value, class DA, class DB>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, Value value, DA da, DB db) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  Shape out_shape;
  if (sa == sb || b.numel() == 1 || is_suffix(sb, sa)) {
    out_shape = sa;
  } else if (a.numel() == 1 || is_suffix(sa, sb)) {
    out_shape = sb;
  } else {
    throw DimensionError(std::string(name) + ": cannot broadcast " + shape_str(sa) + " with " +
                         shape_str(sb));
  }
  const std::size_t n = shape_numel(out_shape);
  const std::size_t na = a.numel();
  const std::size_t nb = b.numel();
  auto x = a.data();
  auto y = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = value(x[i % na], y[i % nb]);
  check_finite(out, name);
  return make_result(name, out_shape, std::move(out), {a, b}, [n, na, nb, da, db](Node& self) {
    const auto& xa = self.inputs[0]->data;
    const auto& xb = self.inputs[1]->data;
    if (wants(self, 0)) {
      auto& g = self.inputs[0]->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) g[i % na] += self.grad[i] * da(xa[i % na], xb[i % nb]);
    }
    if (wants(self, 1)) {
      auto& g = self.inputs[1]->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) g[i % nb] += self.grad[i] * db(xa[i % na], xb[i % nb]);
    }
  });
}

// `deriv` receives (input, output) so ops like exp can reuse their result.
template <class Value, class Deriv>
Tensor unary(const char* name, const Tensor& a, Value value, Deriv deriv) {
  auto x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = value(x[i]);
  check_finite(out, name);
  return make_result(name, a.shape(), std::move(out), {a}, [deriv](Node& self) {
    const auto& xin = self.inputs[0]->data;
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < xin.size(); ++i) g[i] += self.grad[i] * deriv(xin[i], self.data[i]);
  });
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_value(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  auto x = a.data();
  auto y = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = x[i * k + p];
      if (s == 0.0) continue;
      const double* brow = y.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  check_finite(out, "matmul");
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& g = self.grad;
    const auto& xa = self.inputs[0]->data;
    const auto& xb = self.inputs[1]->data;
    if (wants(self, 0)) {
      // dA = dY * B^T
      auto& ga = self.inputs[0]->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = xb.data() + p * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (wants(self, 1)) {
      // dB = A^T * dY
      auto& gb = self.inputs[1]->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double s = xa[i * k + p];
          if (s == 0.0) continue;
          double* brow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) brow[j] += s * grow[j];
        }
      }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (x.rank() < 1 || w.rank() != 2 || x.shape().back() != w.dim(0)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " vs weight " +
                         shape_str(w.shape()));
  }
  const std::size_t in = w.dim(0);
  const std::size_t rows = x.numel() / in;
  Tensor y = matmul(x.rank() == 2 ? x : reshape(x, {rows, in}), w);
  if (bias.defined()) y = add(y, bias);
  Shape out = x.shape();
  out.back() = w.dim(1);
  return x.rank() == 2 ? y : reshape(y, out);
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(
      "add_scalar", a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor softplus(const Tensor& a) {
  return unary("softplus", a, softplus_value, [](double x, double) { return sigmoid_value(x); });
}

Tensor sigmoid(const Tensor& a) {
  return unary("sigmoid", a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Tensor square(const Tensor& a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor silu(const Tensor& a) {
  return unary(
      "silu", a, [](double x) { return x * sigmoid_value(x); },
      [](double x, double) {
        const double s = sigmoid_value(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Tensor abs(const Tensor& a) {
  return unary(
      "abs", a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor sum(const Tensor& t, std::size_t axis) {
  const auto sp = split_at(t.shape(), axis);
  if (sp.n == 0) throw DomainError("sum over empty axis");
  auto x = t.data();
  std::vector<double> out(sp.outer * sp.inner, 0.0);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t j = 0; j < sp.n; ++j)
      for (std::size_t i = 0; i < sp.inner; ++i)
        out[o * sp.inner + i] += x[(o * sp.n + j) * sp.inner + i];
  return make_result("sum", drop_axis(t.shape(), axis), std::move(out), {t}, [sp](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t j = 0; j < sp.n; ++j)
        for (std::size_t i = 0; i < sp.inner; ++i)
          g[(o * sp.n + j) * sp.inner + i] += self.grad[o * sp.inner + i];
  });
}

Tensor mean(const Tensor& t, std::size_t axis) {
  const auto sp = split_at(t.shape(), axis);
  if (sp.n == 0) throw DomainError("mean over empty axis");
  return scale(sum(t, axis), 1.0 / static_cast<double>(sp.n));
}

Tensor max(const Tensor& t, std::size_t axis) {
  const auto sp = split_at(t.shape(), axis);
  if (sp.n == 0) throw DomainError("max over empty axis");
  auto x = t.data();
  std::vector<double> out(sp.outer * sp.inner);
  std::vector<std::size_t> arg(sp.outer * sp.inner);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t i = 0; i < sp.inner; ++i) {
      std::size_t best = 0;
      double v = x[o * sp.n * sp.inner + i];
      for (std::size_t j = 1; j < sp.n; ++j) {
        const double c = x[(o * sp.n + j) * sp.inner + i];
        if (c > v) {
          v = c;
          best = j;
        }
      }
      out[o * sp.inner + i] = v;
      arg[o * sp.inner + i] = (o * sp.n + best) * sp.inner + i;
    }
  }
  return make_result("max", drop_axis(t.shape(), axis), std::move(out), {t},
                     [arg = std::move(arg)](Node& self) {
                       auto& g = self.inputs[0]->ensure_grad();
                       for (std::size_t k = 0; k < arg.size(); ++k) g[arg[k]] += self.grad[k];
                     });
}

Tensor sum_all(const Tensor& t) {
  auto x = t.data();
  double s = 0.0;
  for (double v : x) s += v;
  return make_result("sum_all", {}, {s}, {t}, [](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean_all(const Tensor& t) {
  if (t.numel() == 0) throw DomainError("mean of empty tensor");
  return scale(sum_all(t), 1.0 / static_cast<double>(t.numel()));
}

Tensor reshape(const Tensor& t, Shape shape) {
  if (shape_numel(shape) != t.numel()) {
    throw DimensionError("reshape " + shape_str(t.shape()) + " -> " + shape_str(shape));
  }
  return make_result("reshape", std::move(shape), t.values(), {t}, [](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor permute(const Tensor& t, const std::vector<std::size_t>& perm) {
  const auto& s = t.shape();
  const std::size_t r = s.size();
  if (perm.size() != r) throw DimensionError("permute: rank mismatch");
  std::vector<bool> used(r, false);
  for (auto p : perm) {
    if (p >= r || used[p]) throw DimensionError("permute: invalid permutation");
    used[p] = true;
  }
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * s[i];
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = s[perm[i]];

  const std::size_t n = t.numel();
  // Source offset for every destination element.
  std::vector<std::size_t> src(n);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < r; ++i) off += idx[i] * in_stride[perm[i]];
    src[flat] = off;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  auto x = t.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[src[i]];
  return make_result("permute", std::move(out_shape), std::move(out), {t},
                     [src = std::move(src)](Node& self) {
                       auto& g = self.inputs[0]->ensure_grad();
                       for (std::size_t i = 0; i < src.size(); ++i) g[src[i]] += self.grad[i];
                     });
}

Tensor transpose(const Tensor& t, std::size_t axis_a, std::size_t axis_b) {
  std::vector<std::size_t> perm(t.rank());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  if (axis_a >= perm.size() || axis_b >= perm.size()) throw DimensionError("transpose: bad axis");
  std::swap(perm[axis_a], perm[axis_b]);
  return permute(t, perm);
}

Tensor broadcast_axis(const Tensor& t, std::size_t axis, std::size_t count) {
  const auto& s = t.shape();
  if (axis > s.size()) throw DimensionError("broadcast_axis: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis; i < s.size(); ++i) inner *= s[i];
  Shape out_shape = s;
  out_shape.insert(out_shape.begin() + static_cast<std::ptrdiff_t>(axis), count);
  auto x = t.data();
  std::vector<double> out(outer * count * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < count; ++c)
      std::copy_n(x.data() + o * inner, inner, out.data() + (o * count + c) * inner);
  return make_result("broadcast_axis", std::move(out_shape), std::move(out), {t},
                     [outer, count, inner](Node& self) {
                       auto& g = self.inputs[0]->ensure_grad();
                       for (std::size_t o = 0; o < outer; ++o)
                         for (std::size_t c = 0; c < count; ++c)
                           for (std::size_t i = 0; i < inner; ++i)
                             g[o * inner + i] += self.grad[(o * count + c) * inner + i];
                     });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw UsageError("concat of zero tensors");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) throw DimensionError("concat: axis out of range");
  std::size_t total = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s.size() != s0.size()) throw DimensionError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != s0[i]) {
        throw DimensionError("concat: shape mismatch " + shape_str(s) + " vs " + shape_str(s0));
      }
    }
    total += s[axis];
  }
  const auto sp = split_at(s0, axis);
  Shape out_shape = s0;
  out_shape[axis] = total;
  std::vector<double> out(sp.outer * total * sp.inner);
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.shape()[axis] * sp.inner;
    auto x = p.data();
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::copy_n(x.data() + o * w, w, out.data() + o * total * sp.inner + offset);
    widths.push_back(w);
    offset += w;
  }
  const std::size_t row = total * sp.inner;
  const std::size_t outer = sp.outer;
  return make_result("concat", std::move(out_shape), std::move(out), parts,
                     [widths = std::move(widths), row, outer](Node& self) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (wants(self, k)) {
                           auto& g = self.inputs[k]->ensure_grad();
                           for (std::size_t o = 0; o < outer; ++o)
                             for (std::size_t i = 0; i < widths[k]; ++i)
                               g[o * widths[k] + i] += self.grad[o * row + off + i];
                         }
                         off += widths[k];
                       }
                     });
}

std::vector<Tensor> split(const Tensor& t, std::size_t sections, std::size_t axis) {
  const auto& s = t.shape();
  if (sections == 0 || axis >= s.size() || s[axis] % sections != 0) {
    throw ConfigError("split: axis of size " + (axis < s.size() ? std::to_string(s[axis]) : "?") +
                      " is not divisible into " + std::to_string(sections) + " sections");
  }
  const auto sp = split_at(s, axis);
  const std::size_t part = sp.n / sections;
  const std::size_t w = part * sp.inner;
  const std::size_t row = sp.n * sp.inner;
  Shape part_shape = s;
  part_shape[axis] = part;
  auto x = t.data();
  std::vector<Tensor> out;
  out.reserve(sections);
  for (std::size_t k = 0; k < sections; ++k) {
    std::vector<double> v(sp.outer * w);
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::copy_n(x.data() + o * row + k * w, w, v.data() + o * w);
    const std::size_t outer = sp.outer;
    out.push_back(make_result("split", part_shape, std::move(v), {t}, [k, w, row, outer](Node& self) {
      auto& g = self.inputs[0]->ensure_grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < w; ++i) g[o * row + k * w + i] += self.grad[o * w + i];
    }));
  }
  return out;
}

Tensor dwconv1d(const Tensor& x, const Tensor& kernel) {
  if (kernel.rank() != 2) throw DimensionError("dwconv1d: kernel must be [D, W]");
  const std::size_t width = kernel.dim(1);
  if (width % 2 == 0) {
    throw ConfigError("dwconv1d: kernel width must be odd, got " + std::to_string(width));
  }
  if (x.rank() != 3 || x.dim(1) != kernel.dim(0)) {
    throw DimensionError("dwconv1d: input " + shape_str(x.shape()) + " vs kernel " +
                         shape_str(kernel.shape()));
  }
  const std::size_t batch = x.dim(0), chans = x.dim(1), len = x.dim(2);
  const auto half = static_cast<std::ptrdiff_t>(width / 2);
  auto in = x.data();
  auto k = kernel.data();
  std::vector<double> out(x.numel(), 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t d = 0; d < chans; ++d) {
      const double* row = in.data() + (b * chans + d) * len;
      double* dst = out.data() + (b * chans + d) * len;
      for (std::size_t g = 0; g < len; ++g) {
        double acc = 0.0;
        for (std::size_t w = 0; w < width; ++w) {
          const auto src = static_cast<std::ptrdiff_t>(g) + static_cast<std::ptrdiff_t>(w) - half;
          if (src >= 0 && src < static_cast<std::ptrdiff_t>(len)) acc += k[d * width + w] * row[src];
        }
        dst[g] = acc;
      }
    }
  }
  check_finite(out, "dwconv1d");
  return make_result("dwconv1d", x.shape(), std::move(out), {x, kernel},
                     [batch, chans, len, width, half](Node& self) {
                       const auto& in = self.inputs[0]->data;
                       const auto& k = self.inputs[1]->data;
                       const bool gx = wants(self, 0), gk = wants(self, 1);
                       std::vector<double>* dx = gx ? &self.inputs[0]->ensure_grad() : nullptr;
                       std::vector<double>* dk = gk ? &self.inputs[1]->ensure_grad() : nullptr;
                       for (std::size_t b = 0; b < batch; ++b) {
                         for (std::size_t d = 0; d < chans; ++d) {
                           const std::size_t base = (b * chans + d) * len;
                           for (std::size_t g = 0; g < len; ++g) {
                             const double go = self.grad[base + g];
                             if (go == 0.0) continue;
                             for (std::size_t w = 0; w < width; ++w) {
                               const auto src = static_cast<std::ptrdiff_t>(g) +
                                                static_cast<std::ptrdiff_t>(w) - half;
                               if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                               if (dx) (*dx)[base + src] += go * k[d * width + w];
                               if (dk) (*dk)[d * width + w] += go * in[base + src];
                             }
                           }
                         }
                       }
                     });
}

Tensor cosine_sim(const Tensor& a, const Tensor& b, std::size_t axis, double eps) {
  if (a.shape() != b.shape()) {
    throw DimensionError("cosine_sim: shapes differ " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const auto sp = split_at(a.shape(), axis);
  auto x = a.data();
  auto y = b.data();
  const std::size_t m = sp.outer * sp.inner;
  std::vector<double> out(m), dots(m), norm_a(m), norm_b(m);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t i = 0; i < sp.inner; ++i) {
      double dot = 0.0, aa = 0.0, bb = 0.0;
      for (std::size_t j = 0; j < sp.n; ++j) {
        const std::size_t idx = (o * sp.n + j) * sp.inner + i;
        dot += x[idx] * y[idx];
        aa += x[idx] * x[idx];
        bb += y[idx] * y[idx];
      }
      const std::size_t r = o * sp.inner + i;
      dots[r] = dot;
      norm_a[r] = std::sqrt(aa);
      norm_b[r] = std::sqrt(bb);
      const double c = dot / (std::max(norm_a[r], eps) * std::max(norm_b[r], eps));
      out[r] = std::clamp(c, -1.0, 1.0);
    }
  }
  // The clamp only trims rounding overshoot; the gradient passes straight through it.
  return make_result(
      "cosine_sim", drop_axis(a.shape(), axis), std::move(out), {a, b},
      [sp, eps, dots = std::move(dots), norm_a = std::move(norm_a),
       norm_b = std::move(norm_b)](Node& self) {
        const auto& x = self.inputs[0]->data;
        const auto& y = self.inputs[1]->data;
        const bool ga = wants(self, 0), gb = wants(self, 1);
        std::vector<double>* da = ga ? &self.inputs[0]->ensure_grad() : nullptr;
        std::vector<double>* db = gb ? &self.inputs[1]->ensure_grad() : nullptr;
        for (std::size_t o = 0; o < sp.outer; ++o) {
          for (std::size_t i = 0; i < sp.inner; ++i) {
            const std::size_t r = o * sp.inner + i;
            const double go = self.grad[r];
            if (go == 0.0) continue;
            const double ma = std::max(norm_a[r], eps);
            const double mb = std::max(norm_b[r], eps);
            const double inv = 1.0 / (ma * mb);
            const double raw = dots[r] * inv;
            const double ka = norm_a[r] > eps ? raw / (norm_a[r] * ma) : 0.0;
            const double kb = norm_b[r] > eps ? raw / (norm_b[r] * mb) : 0.0;
            for (std::size_t j = 0; j < sp.n; ++j) {
              const std::size_t idx = (o * sp.n + j) * sp.inner + i;
              if (da) (*da)[idx] += go * (y[idx] * inv - ka * x[idx]);
              if (db) (*db)[idx] += go * (x[idx] * inv - kb * y[idx]);
            }
          }
        }
      });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mse: shapes differ " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  return mean_all(square(sub(a, b)));
}

}  // namespace mpcc::ops
