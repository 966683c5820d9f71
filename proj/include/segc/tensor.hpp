#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace segc {

using Array = Eigen::ArrayXd;
using Shape = std::vector<std::size_t>;
using NodeId = std::size_t;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

class Graph;

/// Dense row-major float64 tensor. Data is immutable and shared between copies.
/// A tensor attached to a Graph node participates in differentiation; a tensor
/// without a node is a constant.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, Array data);

  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return static_cast<std::size_t>(data_->size()); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  const Array& data() const { return *data_; }
  const std::shared_ptr<const Array>& shared_data() const { return data_; }
  double operator[](std::size_t i) const { return (*data_)(static_cast<Eigen::Index>(i)); }
  /// Value of a single-element tensor.
  double item() const;

  bool requires_grad() const { return graph_ != nullptr; }
  std::optional<NodeId> node() const;
  Graph* graph() const { return graph_; }

  /// Same values, cut from any graph.
  Tensor detach() const;

 private:
  friend class Graph;
  Shape shape_;
  std::shared_ptr<const Array> data_;
  Graph* graph_ = nullptr;
  NodeId node_ = 0;
};

/// Receives the output gradient and one gradient accumulator per op input.
/// Accumulators of constant inputs are null.
using BackwardFn = std::function<void(const Array& grad_out, std::span<Array* const> input_grads)>;

/// Leaf gradients produced by Graph::backward.
class GradientMap {
 public:
  /// d(loss)/d(leaf); zeros if the leaf did not contribute.
  Tensor at(const Tensor& leaf) const;
  bool contains(const Tensor& leaf) const;

 private:
  friend class Graph;
  const Graph* graph_ = nullptr;
  std::unordered_map<NodeId, Tensor> grads_;
};

/// Append-only differentiation tape. Nodes are topologically ordered by
/// construction; backward walks them once in reverse append order.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Registers a copy of value as a differentiable leaf.
  Tensor leaf(const Tensor& value);

  /// Records the result of an op. Inputs without a node in this graph are
  /// treated as constants. Returns a constant when no input is differentiable.
  static Tensor record(Shape shape, Array value, std::initializer_list<const Tensor*> inputs,
                       BackwardFn backward);
  static Tensor record(Shape shape, Array value, std::span<const Tensor> inputs,
                       BackwardFn backward);

  GradientMap backward(const Tensor& loss) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<std::optional<NodeId>> inputs;
    BackwardFn backward;
  };

  static Graph* common_graph(std::span<const Tensor* const> inputs);
  Tensor append(Shape shape, std::shared_ptr<const Array> value, Node node);

  std::vector<Node> nodes_;
};

enum class BinaryOp { add, sub, mul, div };

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b);
Tensor elementwise(BinaryOp op, const Tensor& a, double b);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, double b);
Tensor operator-(const Tensor& a, double b);
Tensor operator*(const Tensor& a, double b);
Tensor operator/(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(double a, const Tensor& b);
Tensor operator-(const Tensor& a);

Tensor sigmoid(const Tensor& x);
/// Subgradient 1 strictly inside (lo, hi), 0 elsewhere.
Tensor clamp(const Tensor& x, double lo, double hi);
Tensor leaky_relu(const Tensor& x, double slope);

/// Scalar sum in fixed row-major order.
Tensor sum(const Tensor& x);

/// Cross-correlation of input [C_in,H,W] with kernel [C_out,C_in,k,k].
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding);
/// Adds bias[c] to every element of channel c of x [C,H,W].
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);
/// Nearest-neighbour x2 upsampling of [C,H,W].
Tensor upsample_nearest2x(const Tensor& x);
/// Stacks equally shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);

/// Max over elements of |analytic - central difference| / max(1, |analytic|).
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double h = 1e-5);
/// Same, restricted to the listed flat indices of x.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  std::span<const std::size_t> indices, double h = 1e-5);

}  // namespace segc
