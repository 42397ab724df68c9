#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dasn {

using Shape = std::vector<std::size_t>;
using NodeId = std::size_t;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

class Tape;

// Dense row-major array of doubles. A tensor produced by an op whose inputs
// live on a tape is itself recorded on that tape; otherwise it is a plain
// constant. Scalars have an empty shape.
//
// Construction rejects non-finite values, so every op output is checked at
// the boundary.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  // Raw write access for optimizers and initializers. Only constants may be
  // mutated; the caller is responsible for keeping values finite.
  std::span<double> mutable_data();

  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t row, std::size_t col) const;
  double item() const;

  bool recorded() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  NodeId node() const { return node_; }

  // Same values, no tape.
  Tensor detach() const;

  bool bitwise_equal(const Tensor& other) const;

 private:
  friend class Tape;

  Shape shape_;
  std::vector<double> data_;
  Tape* tape_ = nullptr;
  NodeId node_ = 0;
};

// Per-node gradient buffers produced by Tape::backward.
class Gradients {
 public:
  Gradients(const Tape* tape, std::vector<Shape> shapes,
            std::vector<std::vector<double>> buffers);

  // Gradient of the root with respect to `t`. Unreachable nodes yield exact
  // zeros. `t` must be recorded on the tape that produced these gradients.
  Tensor of(const Tensor& t) const;

 private:
  const Tape* tape_;
  std::vector<Shape> shapes_;
  std::vector<std::vector<double>> buffers_;
};

// Define-by-run record of operations. Nodes are appended in evaluation order,
// which is a valid topological order by construction.
class Tape {
 public:
  using GradBuffers = std::vector<std::vector<double>>;
  // Receives the upstream gradient of the node's output and accumulates
  // into the buffers of the node's inputs.
  using BackwardFn = std::function<void(std::span<const double> upstream, GradBuffers& grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers `value` as a differentiable leaf.
  Tensor leaf(const Tensor& value);

  // Appends an op output. Used by op implementations.
  Tensor record(Tensor value, BackwardFn backward);

  Gradients backward(const Tensor& root) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    BackwardFn backward;  // empty for leaves
  };
  std::vector<Node> nodes_;
};

// --- ops ------------------------------------------------------------------

// [m x k] . [k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
// Adds a length-n bias to every row of an [m x n] matrix.
Tensor add_bias(const Tensor& a, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// Subgradient at exactly zero is 0.
Tensor relu(const Tensor& a);
// Rank 1: softmax over the vector. Rank 2: softmax over each row. The
// softmax axis must have at least two entries.
Tensor softmax(const Tensor& a);
// Gradient reversal: identity forward, multiplies the gradient by -1.
Tensor grl(const Tensor& a);
// log(max(a, floor)); the gradient is zero where the floor is active.
Tensor clamped_log(const Tensor& a, double floor);
// out[i] = a[i, index[i]] for an [m x n] matrix.
Tensor pick(const Tensor& a, std::span<const std::size_t> index);
Tensor reduce_mean(const Tensor& a);
Tensor reduce_sum(const Tensor& a);

}  // namespace dasn
