#include "mpcc/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "mpcc/error.hpp"

namespace mpcc {

namespace {

thread_local std::uint64_t g_next_seq = 1;
thread_local bool g_grad_enabled = true;

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  node->seq = g_next_seq++;
  return node;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(make_leaf({}, {value}, requires_grad));
}

const Shape& Tensor::shape() const {
  if (!node_) throw UsageError("use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<const double> Tensor::data() const {
  if (!node_) throw UsageError("use of undefined tensor");
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!node_) throw UsageError("use of undefined tensor");
  if (node_->backward) throw UsageError("only leaf tensors may be mutated in place");
  return node_->data;
}

std::vector<double> Tensor::values() const {
  auto d = data();
  return {d.begin(), d.end()};
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw UsageError("tensor has no gradient");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!node_) throw UsageError("use of undefined tensor");
  return node_->ensure_grad();
}

void Tensor::zero_grad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw DimensionError("index rank mismatch for " + shape_str(s));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= s[axis]) throw DimensionError("index out of range for " + shape_str(s));
    flat = flat * s[axis] + i;
    ++axis;
  }
  return node_->data[flat];
}

Tensor Tensor::detach() const { return Tensor::from(shape(), values(), false); }

const char* Tensor::op_name() const { return node_ ? node_->op : "undefined"; }

bool Tensor::is_leaf() const { return node_ && !node_->backward; }

void Tensor::backward() const {
  if (!node_) throw UsageError("backward on undefined tensor");
  if (node_->data.size() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " + shape_str(node_->shape));
  }
  if (!node_->requires_grad) throw UsageError("backward on a tensor that does not require grad");

  // Collect every reachable node that participates in differentiation.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{node_.get()};
  while (!stack.empty()) {
    auto* n = stack.back();
    stack.pop_back();
    if (!n->requires_grad || !seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& in : n->inputs) stack.push_back(in.get());
  }
  // Reverse insertion order is a valid reverse topological order because an
  // op's inputs always exist before its output is created.
  std::sort(order.begin(), order.end(),
            [](const detail::Node* a, const detail::Node* b) { return a->seq > b->seq; });

  for (auto* n : order) {
    if (n->backward) n->grad.assign(n->data.size(), 0.0);
  }
  node_->ensure_grad()[0] += 1.0;
  for (auto* n : order) {
    if (n->backward) n->backward(*n);
  }
}

namespace autograd {

bool enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(const char* op, Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
                   detail::BackwardFn backward) {
  auto node = make_leaf(std::move(shape), std::move(data), false);
  node->op = op;
  const bool needs = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(),
                                                   [](const Tensor& t) { return t.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace autograd

}  // namespace mpcc
