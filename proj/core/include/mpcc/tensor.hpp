#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mpcc {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node;
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until backward touches this node
  bool requires_grad = false;
  std::uint64_t seq = 0;  // insertion order on the creating thread
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;  // null for leaves

  std::vector<double>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major tensor of doubles with an optional gradient slot.
///
/// A Tensor is a shared handle; copies refer to the same storage. Values are
/// never modified by ops (every op allocates its result), so handles can be
/// passed around freely. Leaf tensors (parameters) are the only ones whose
/// values change, through mutable_data() in the optimizer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  std::vector<double> values() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  /// Same values, no history, no gradient.
  Tensor detach() const;

  /// Reverse-mode pass from a scalar. Leaf gradients accumulate across calls.
  void backward() const;

  const char* op_name() const;
  bool is_leaf() const;

  // Autograd plumbing for op implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

namespace autograd {

/// True while gradient recording is enabled on this thread.
bool enabled();

/// Disables graph recording for the lifetime of the guard.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op result. `backward` is attached only when recording is on and
/// at least one input requires a gradient; it must read self.grad and add
/// into self.inputs[i]->ensure_grad() for inputs that require grad.
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::vector<Tensor> inputs, detail::BackwardFn backward);

}  // namespace autograd

}  // namespace mpcc
