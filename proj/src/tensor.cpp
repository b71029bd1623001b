#include "jscc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace jscc {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void check_finite(const Node& node) {
  for (double v : node.values) {
    if (!std::isfinite(v)) {
      throw NonFiniteError(std::string("op '") + node.op + "' produced a non-finite value");
    }
  }
}

NodePtr make_node(const char* op, std::vector<std::size_t> shape, std::vector<double> values,
                  std::vector<NodePtr> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->parents = std::move(parents);
  node->backward = std::move(backward);
  check_finite(*node);
  return node;
}

// Precomputed element maps for a broadcast binary op: out value i combines
// a.values[map_a[i]] with b.values[map_b[i]]. Empty maps mean "same shape,
// use i directly".
struct Broadcast {
  std::vector<std::size_t> out_shape;
  std::vector<std::uint32_t> map_a;
  std::vector<std::uint32_t> map_b;
  bool same = false;
};

Broadcast broadcast_shapes(const char* op, const std::vector<std::size_t>& a,
                           const std::vector<std::size_t>& b) {
  Broadcast bc;
  if (a == b) {
    bc.out_shape = a;
    bc.same = true;
    return bc;
  }
  std::size_t rank = std::max(a.size(), b.size());
  std::vector<std::size_t> pa(rank, 1), pb(rank, 1), out(rank, 1);
  std::copy(a.begin(), a.end(), pa.begin() + (rank - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + (rank - b.size()));
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] == pb[i]) {
      out[i] = pa[i];
    } else if (pa[i] == 1) {
      out[i] = pb[i];
    } else if (pb[i] == 1) {
      out[i] = pa[i];
    } else {
      fail(std::string("op '") + op + "' cannot broadcast shapes " + format_shape(a) + " and " +
           format_shape(b));
    }
  }
  std::vector<std::size_t> sa(rank), sb(rank);
  std::size_t run_a = 1, run_b = 1;
  for (std::size_t i = rank; i-- > 0;) {
    sa[i] = (pa[i] == 1) ? 0 : run_a;
    sb[i] = (pb[i] == 1) ? 0 : run_b;
    run_a *= pa[i];
    run_b *= pb[i];
  }
  std::size_t numel = shape_numel(out);
  bc.out_shape = out;
  bc.map_a.resize(numel);
  bc.map_b.resize(numel);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t lin = 0; lin < numel; ++lin) {
    std::size_t ia = 0, ib = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      ia += idx[d] * sa[d];
      ib += idx[d] * sb[d];
    }
    bc.map_a[lin] = static_cast<std::uint32_t>(ia);
    bc.map_b[lin] = static_cast<std::uint32_t>(ib);
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out[d]) break;
      idx[d] = 0;
    }
  }
  return bc;
}

NodePtr require(const Tensor& t, const char* op) {
  if (!t.defined()) fail(std::string("op '") + op + "' received an undefined tensor");
  return t.node();
}

template <typename Combine, typename GradA, typename GradB>
Tensor binary_op(const char* op, const Tensor& ta, const Tensor& tb, Combine combine, GradA grad_a,
                 GradB grad_b) {
  NodePtr a = require(ta, op);
  NodePtr b = require(tb, op);
  Broadcast bc = broadcast_shapes(op, a->shape, b->shape);
  std::size_t numel = shape_numel(bc.out_shape);
  std::vector<double> values(numel);
  if (bc.same) {
    for (std::size_t i = 0; i < numel; ++i) values[i] = combine(a->values[i], b->values[i]);
  } else {
    for (std::size_t i = 0; i < numel; ++i)
      values[i] = combine(a->values[bc.map_a[i]], b->values[bc.map_b[i]]);
  }
  std::vector<std::size_t> out_shape = bc.out_shape;
  auto backward = [bc = std::move(bc), grad_a, grad_b](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    std::size_t numel = self.size();
    if (bc.same) {
      for (std::size_t i = 0; i < numel; ++i) {
        double g = self.grad[i];
        pa.grad[i] += grad_a(g, pa.values[i], pb.values[i]);
        pb.grad[i] += grad_b(g, pa.values[i], pb.values[i]);
      }
    } else {
      for (std::size_t i = 0; i < numel; ++i) {
        double g = self.grad[i];
        std::size_t ia = bc.map_a[i], ib = bc.map_b[i];
        pa.grad[ia] += grad_a(g, pa.values[ia], pb.values[ib]);
        pb.grad[ib] += grad_b(g, pa.values[ia], pb.values[ib]);
      }
    }
  };
  return Tensor(make_node(op, std::move(out_shape), std::move(values), {a, b}, std::move(backward)));
}

template <typename Fwd, typename Bwd>
Tensor unary_op(const char* op, const Tensor& tx, Fwd fwd, Bwd bwd) {
  NodePtr x = require(tx, op);
  std::vector<double> values(x->size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = fwd(x->values[i]);
  auto backward = [bwd](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.size(); ++i)
      p.grad[i] += bwd(self.grad[i], p.values[i], self.values[i]);
  };
  return Tensor(make_node(op, x->shape, std::move(values), {x}, std::move(backward)));
}

}  // namespace

std::string format_shape(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::constant(std::vector<std::size_t> shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size()) {
    fail("constant: shape " + format_shape(shape) + " does not hold " +
         std::to_string(values.size()) + " values");
  }
  return Tensor(make_node("constant", std::move(shape), std::move(values), {}, nullptr));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::vector<double> v(shape_numel(shape), 0.0);
  return Tensor(make_node("constant", std::move(shape), std::move(v), {}, nullptr));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  std::vector<double> v(shape_numel(shape), value);
  return Tensor(make_node("constant", std::move(shape), std::move(v), {}, nullptr));
}

Tensor Tensor::scalar(double value) { return constant({1}, {value}); }

Tensor Tensor::parameter(std::vector<std::size_t> shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node()->op = "parameter";
  t.node()->trainable = true;
  return t;
}

const std::vector<std::size_t>& Tensor::shape() const {
  if (!node_) fail("shape() on an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::size() const {
  if (!node_) fail("size() on an undefined tensor");
  return node_->values.size();
}

bool Tensor::trainable() const { return node_ && node_->trainable; }

const char* Tensor::op() const { return node_ ? node_->op : "undefined"; }

const std::vector<double>& Tensor::values() const {
  if (!node_) fail("values() on an undefined tensor");
  return node_->values;
}

std::vector<double>& Tensor::mutable_values() {
  if (!node_) fail("mutable_values() on an undefined tensor");
  if (!node_->parents.empty()) fail("mutable_values() on a non-leaf tensor");
  return node_->values;
}

const std::vector<double>& Tensor::grad() const {
  if (!node_) fail("grad() on an undefined tensor");
  return node_->grad;
}

double Tensor::item() const {
  if (size() != 1) fail("item() requires a single-element tensor, got " + format_shape(shape()));
  return node_->values[0];
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Tensor neg(const Tensor& x) {
  return unary_op(
      "neg", x, [](double v) { return -v; }, [](double g, double, double) { return -g; });
}

Tensor add_scalar(const Tensor& x, double c) {
  return unary_op(
      "add_scalar", x, [c](double v) { return v + c; },
      [](double g, double, double) { return g; });
}

Tensor mul_scalar(const Tensor& x, double c) {
  return unary_op(
      "mul_scalar", x, [c](double v) { return v * c; },
      [c](double g, double, double) { return g * c; });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      "exp", x, [](double v) { return std::exp(v); },
      [](double g, double, double out) { return g * out; });
}

Tensor log(const Tensor& x) {
  NodePtr n = require(x, "log");
  for (double v : n->values) {
    if (!(v > 0.0)) fail("op 'log' received a non-positive input (" + std::to_string(v) + ")");
  }
  return unary_op(
      "log", x, [](double v) { return std::log(v); },
      [](double g, double in, double) { return g / in; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      "sigmoid", x,
      [](double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
      [](double g, double, double out) { return g * out * (1.0 - out); });
}

Tensor tanh(const Tensor& x) {
  return unary_op(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double g, double, double out) { return g * (1.0 - out * out); });
}

Tensor relu(const Tensor& x) {
  return unary_op(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double g, double in, double) { return in > 0.0 ? g : 0.0; });
}

Tensor softplus(const Tensor& x) {
  // log(1 + e^v) computed from the stable side; derivative is the sigmoid.
  return unary_op(
      "softplus", x,
      [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double g, double in, double) {
        double s = in >= 0.0 ? 1.0 / (1.0 + std::exp(-in)) : std::exp(in) / (1.0 + std::exp(in));
        return g * s;
      });
}

Tensor square(const Tensor& x) {
  return unary_op(
      "square", x, [](double v) { return v * v; },
      [](double g, double in, double) { return 2.0 * g * in; });
}

Tensor absval(const Tensor& x) {
  // Subgradient 0 at the origin.
  return unary_op(
      "absval", x, [](double v) { return std::fabs(v); },
      [](double g, double in, double) { return in > 0.0 ? g : (in < 0.0 ? -g : 0.0); });
}

Tensor reciprocal(const Tensor& x) {
  return unary_op(
      "reciprocal", x, [](double v) { return 1.0 / v; },
      [](double g, double, double out) { return -g * out * out; });
}

Tensor matmul(const Tensor& ta, const Tensor& tb) {
  NodePtr a = require(ta, "matmul");
  NodePtr b = require(tb, "matmul");
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0]) {
    fail("op 'matmul' shapes do not compose: " + format_shape(a->shape) + " x " +
         format_shape(b->shape));
  }
  std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
  std::vector<double> values(m * n, 0.0);
  const double* pa = a->values.data();
  const double* pb = b->values.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      double av = pa[i * k + kk];
      const double* brow = pb + kk * n;
      double* orow = values.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  auto backward = [m, k, n](Node& self) {
    Node& A = *self.parents[0];
    Node& B = *self.parents[1];
    const double* g = self.grad.data();
    // dA = G * B^T
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t kk = 0; kk < k; ++kk) {
        double acc = 0.0;
        const double* grow = g + i * n;
        const double* brow = B.values.data() + kk * n;
        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
        A.grad[i * k + kk] += acc;
      }
    }
    // dB = A^T * G
    for (std::size_t kk = 0; kk < k; ++kk) {
      for (std::size_t i = 0; i < m; ++i) {
        double av = A.values[i * k + kk];
        const double* grow = g + i * n;
        double* brow = B.grad.data() + kk * n;
        for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
      }
    }
  };
  return Tensor(make_node("matmul", {m, n}, std::move(values), {a, b}, std::move(backward)));
}

Tensor affine(const Tensor& tx, const Tensor& tw, const Tensor& tbias) {
  NodePtr x = require(tx, "affine");
  NodePtr w = require(tw, "affine");
  NodePtr bias = require(tbias, "affine");
  if (x->shape.size() != 2 || w->shape.size() != 2 || x->shape[1] != w->shape[0] ||
      bias->shape.size() != 1 || bias->shape[0] != w->shape[1]) {
    fail("op 'affine' shapes do not compose: " + format_shape(x->shape) + " x " +
         format_shape(w->shape) + " + " + format_shape(bias->shape));
  }
  std::size_t m = x->shape[0], k = x->shape[1], n = w->shape[1];
  std::vector<double> values(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = values.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) orow[j] = bias->values[j];
    for (std::size_t kk = 0; kk < k; ++kk) {
      double xv = x->values[i * k + kk];
      const double* wrow = w->values.data() + kk * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += xv * wrow[j];
    }
  }
  auto backward = [m, k, n](Node& self) {
    Node& X = *self.parents[0];
    Node& W = *self.parents[1];
    Node& B = *self.parents[2];
    const double* g = self.grad.data();
    for (std::size_t i = 0; i < m; ++i) {
      const double* grow = g + i * n;
      for (std::size_t kk = 0; kk < k; ++kk) {
        double acc = 0.0;
        const double* wrow = W.values.data() + kk * n;
        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * wrow[j];
        X.grad[i * k + kk] += acc;
      }
      for (std::size_t kk = 0; kk < k; ++kk) {
        double xv = X.values[i * k + kk];
        double* wrow = W.grad.data() + kk * n;
        for (std::size_t j = 0; j < n; ++j) wrow[j] += xv * grow[j];
      }
      for (std::size_t j = 0; j < n; ++j) B.grad[j] += grow[j];
    }
  };
  return Tensor(make_node("affine", {m, n}, std::move(values), {x, w, bias}, std::move(backward)));
}

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail("op 'concat' needs at least one input");
  std::vector<NodePtr> nodes;
  nodes.reserve(parts.size());
  for (const Tensor& t : parts) nodes.push_back(require(t, "concat"));
  const std::vector<std::size_t>& lead = nodes[0]->shape;
  if (lead.empty()) fail("op 'concat' requires rank >= 1 inputs");
  std::size_t rows = 1;
  for (std::size_t i = 0; i + 1 < lead.size(); ++i) rows *= lead[i];
  std::size_t total_last = 0;
  std::vector<std::size_t> widths;
  for (const NodePtr& n : nodes) {
    if (n->shape.size() != lead.size() ||
        !std::equal(lead.begin(), lead.end() - 1, n->shape.begin())) {
      fail("op 'concat' leading dimensions differ: " + format_shape(lead) + " vs " +
           format_shape(n->shape));
    }
    widths.push_back(n->shape.back());
    total_last += n->shape.back();
  }
  std::vector<std::size_t> out_shape(lead.begin(), lead.end() - 1);
  out_shape.push_back(total_last);
  std::vector<double> values(rows * total_last);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < nodes.size(); ++p) {
    std::size_t w = widths[p];
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(nodes[p]->values.data() + r * w, w, values.data() + r * total_last + offset);
    }
    offset += w;
  }
  auto backward = [rows, total_last, widths](Node& self) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < self.parents.size(); ++p) {
      Node& parent = *self.parents[p];
      std::size_t w = widths[p];
      for (std::size_t r = 0; r < rows; ++r) {
        const double* src = self.grad.data() + r * total_last + offset;
        double* dst = parent.grad.data() + r * w;
        for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
      }
      offset += w;
    }
  };
  return Tensor(make_node("concat", out_shape, std::move(values), std::move(nodes),
                          std::move(backward)));
}

Tensor slice_last(const Tensor& tx, std::size_t begin, std::size_t end) {
  NodePtr x = require(tx, "slice");
  if (x->shape.empty()) fail("op 'slice' requires rank >= 1 input");
  std::size_t last = x->shape.back();
  if (!(begin < end && end <= last)) {
    fail("op 'slice' range [" + std::to_string(begin) + ", " + std::to_string(end) +
         ") invalid for shape " + format_shape(x->shape));
  }
  std::size_t rows = 1;
  for (std::size_t i = 0; i + 1 < x->shape.size(); ++i) rows *= x->shape[i];
  std::size_t w = end - begin;
  std::vector<std::size_t> out_shape(x->shape.begin(), x->shape.end() - 1);
  out_shape.push_back(w);
  std::vector<double> values(rows * w);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(x->values.data() + r * last + begin, w, values.data() + r * w);
  auto backward = [rows, w, last, begin](Node& self) {
    Node& parent = *self.parents[0];
    for (std::size_t r = 0; r < rows; ++r) {
      const double* src = self.grad.data() + r * w;
      double* dst = parent.grad.data() + r * last + begin;
      for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
    }
  };
  return Tensor(make_node("slice", out_shape, std::move(values), {x}, std::move(backward)));
}

Tensor reshape(const Tensor& tx, std::vector<std::size_t> shape) {
  NodePtr x = require(tx, "reshape");
  if (shape_numel(shape) != x->size()) {
    fail("op 'reshape' cannot view " + format_shape(x->shape) + " as " + format_shape(shape));
  }
  std::vector<double> values = x->values;
  auto backward = [](Node& self) {
    Node& parent = *self.parents[0];
    for (std::size_t i = 0; i < self.size(); ++i) parent.grad[i] += self.grad[i];
  };
  return Tensor(make_node("reshape", std::move(shape), std::move(values), {x}, std::move(backward)));
}

Tensor sum_all(const Tensor& tx) {
  NodePtr x = require(tx, "sum");
  double acc = 0.0;
  for (double v : x->values) acc += v;
  auto backward = [](Node& self) {
    Node& parent = *self.parents[0];
    double g = self.grad[0];
    for (std::size_t i = 0; i < parent.grad.size(); ++i) parent.grad[i] += g;
  };
  return Tensor(make_node("sum", {1}, {acc}, {x}, std::move(backward)));
}

Tensor mean_all(const Tensor& tx) {
  NodePtr x = require(tx, "mean");
  double acc = 0.0;
  for (double v : x->values) acc += v;
  double inv = 1.0 / static_cast<double>(x->size());
  auto backward = [inv](Node& self) {
    Node& parent = *self.parents[0];
    double g = self.grad[0] * inv;
    for (std::size_t i = 0; i < parent.grad.size(); ++i) parent.grad[i] += g;
  };
  return Tensor(make_node("mean", {1}, {acc * inv}, {x}, std::move(backward)));
}

Tensor row_sum(const Tensor& tx) {
  NodePtr x = require(tx, "row_sum");
  if (x->shape.size() != 2) fail("op 'row_sum' requires a rank-2 input, got " + format_shape(x->shape));
  std::size_t rows = x->shape[0], cols = x->shape[1];
  std::vector<double> values(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x->values.data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c];
    values[r] = acc;
  }
  auto backward = [rows, cols](Node& self) {
    Node& parent = *self.parents[0];
    for (std::size_t r = 0; r < rows; ++r) {
      double g = self.grad[r];
      double* row = parent.grad.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) row[c] += g;
    }
  };
  return Tensor(make_node("row_sum", {rows}, std::move(values), {x}, std::move(backward)));
}

Tensor stop_gradient(const Tensor& tx) {
  NodePtr x = require(tx, "stop_gradient");
  return Tensor(make_node("stop_gradient", x->shape, x->values, {}, nullptr));
}

void backward(const Tensor& root) {
  if (!root.defined()) fail("backward() on an undefined tensor");
  if (root.size() != 1) {
    fail("backward() requires a single-element root, got " + format_shape(root.shape()));
  }
  // Iterative post-order DFS; the order vector ends with the root.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  struct Frame {
    Node* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  Node* root_node = root.node().get();
  stack.push_back({root_node, 0});
  seen.insert(root_node);
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next_parent < top.node->parents.size()) {
      Node* parent = top.node->parents[top.next_parent++].get();
      if (seen.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(top.node);
      stack.pop_back();
    }
  }
  for (Node* node : order) node->grad.assign(node->size(), 0.0);
  root_node->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) node->backward(*node);
  }
}

}  // namespace jscc
