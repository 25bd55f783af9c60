#pragma once

// Reverse-mode automatic differentiation over dense row-major float64 tensors.
//
// A Tensor is a cheap, shared handle to a graph node. Operations in ops.hpp
// build new nodes that remember their parents and a backward closure; calling
// backward() on a scalar result walks the graph once in reverse topological
// order. Leaves (tensors created directly with requires_grad) accumulate their
// gradients across backward calls until zero_grad() or an optimizer step
// clears them. Interior gradients are recomputed from scratch per call.
//
// A graph and its tensors belong to one thread of control.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace eva::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;  // null for leaves
  std::uint64_t accumulations = 0;      // gradient contributions received (leaves)

  bool is_leaf() const { return !backward; }

  /// Gradient buffer of this node, allocated as zeros on first use. Each
  /// call from a backward closure counts as one accumulation.
  std::vector<double>& grad_for_accumulate();
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// 2-D tensor from nested rows; all rows must have equal length.
  static Tensor matrix(const std::vector<std::vector<double>>& rows, bool requires_grad = false);
  static Tensor vector(const std::vector<double>& values, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t rows() const;  // 2-D only
  std::size_t cols() const;  // 2-D only

  std::span<const double> data() const;
  /// Mutable access to the values. Only meaningful on leaves; mutating an
  /// interior node does not re-run the graph.
  std::span<double> mutable_data();
  double operator[](std::size_t i) const { return data()[i]; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  /// Number of gradient contributions a leaf has received since the last
  /// zero_grad().
  std::uint64_t accumulations() const;

  /// Seeds d(self)/d(self) = 1 and propagates. Requires a single element.
  void backward() const;

  /// Same values, cut from the graph.
  Tensor detach() const;

  /// Node identity, for sharing checks.
  const void* id() const { return node_.get(); }

  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// While alive, operations on this thread record no graph (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Creates the result node of an operation. The node requires a gradient iff
/// any parent does (and recording is enabled); parents and the backward closure are only retained then.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(detail::Node&)> backward);

}  // namespace eva::ad
