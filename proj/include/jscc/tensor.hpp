#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace jscc {

// Thrown by any op whose result holds an inf or NaN. A distinct type so that
// training loops can tell a numerically exploded run from a genuine bug.
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Node {
  const char* op = "leaf";
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> parents;
  // Accumulates this node's gradient into its parents. Parents' grad buffers
  // are already sized and zeroed when this runs.
  std::function<void(Node&)> backward;
  bool trainable = false;

  std::size_t size() const { return values.size(); }
};

}  // namespace detail

// Handle to a node in a dynamically built computation graph. Copying a Tensor
// copies the handle, not the data. Graphs are built eagerly: each op computes
// its values immediately and records how to push gradients back.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(std::vector<std::size_t> shape, std::vector<double> values);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor scalar(double value);
  // Leaf with trainable = true; gradients accumulate here during backward.
  static Tensor parameter(std::vector<std::size_t> shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t size() const;
  std::size_t rank() const { return shape().size(); }
  bool trainable() const;
  const char* op() const;

  const std::vector<double>& values() const;
  // Direct mutation of a leaf's storage (optimizer updates, finite
  // differences). Calling this on a non-leaf is a logic error.
  std::vector<double>& mutable_values();
  const std::vector<double>& grad() const;

  // Value of a single-element tensor.
  double item() const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Elementwise binary ops with right-aligned broadcasting: trailing dimensions
// must match or be 1 on either side. Shape errors name the op and both shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& x);
Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);

// Elementwise unaries. log throws on any non-positive input; every op throws
// on a non-finite result, naming itself.
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor square(const Tensor& x);
Tensor absval(const Tensor& x);
Tensor reciprocal(const Tensor& x);

// Rank-2 matrix product [m,k]x[k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);
// x[m,k], w[k,n], bias[n] -> x*w + bias, one fused node.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& bias);

// Concatenate along the last axis; all leading dimensions must match.
Tensor concat_last(const std::vector<Tensor>& parts);
// View of [..., begin:end) along the last axis, as a copy.
Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& x, std::vector<std::size_t> shape);

Tensor sum_all(const Tensor& x);   // -> shape {1}
Tensor mean_all(const Tensor& x);  // -> shape {1}
// [rows, cols] -> [rows], summing each row.
Tensor row_sum(const Tensor& x);

// Forward the values, block the gradient. Used where a term must not train
// the subgraph that produced its input.
Tensor stop_gradient(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator-(const Tensor& x) { return neg(x); }

// Reverse-mode sweep from a single-element root. Zeroes the grad buffers of
// every node reachable from the root, seeds the root with 1, then runs each
// node's backward in reverse topological order. Nodes that do not contribute
// to the root keep (or get) zero gradient.
void backward(const Tensor& root);

std::string format_shape(const std::vector<std::size_t>& shape);

}  // namespace jscc
