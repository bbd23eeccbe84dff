#pragma once

#include <cstddef>
#include <vector>

#include "mpcc/checkpoint.hpp"

namespace mpcc {

/// Adaptive moments with decoupled weight decay:
///   p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
class AdamW {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 5e-2;
  };

  AdamW(std::vector<NamedTensor> params, Options opts);

  /// Applies one update from the accumulated gradients (missing gradients
  /// count as zero), then clears them.
  void step();
  void zero_grad();
  std::size_t steps() const { return t_; }

 private:
  std::vector<NamedTensor> params_;
  Options opts_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace mpcc
