#include "mpcc/optim.hpp"

#include <cmath>

namespace mpcc {

AdamW::AdamW(std::vector<NamedTensor> params, Options opts) : params_(std::move(params)), opts_(opts) {
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& t = params_[k].tensor;
    auto w = t.mutable_data();
    const bool has = t.has_grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = has ? t.grad()[i] : 0.0;
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
      const double update = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opts_.eps);
      w[i] -= opts_.lr * (update + opts_.weight_decay * w[i]);
    }
  }
  zero_grad();
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace mpcc
