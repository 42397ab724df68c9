#include "dasn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "dasn/error.hpp"

namespace dasn {

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (const auto extent : shape) n *= extent;
  return n;
}

// --- Tensor -----------------------------------------------------------------

Tensor::Tensor() : data_{0.0} {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (const auto extent : shape_) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + to_string(shape_));
  }
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + to_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
  }
  for (const double v : data_) {
    if (!std::isfinite(v)) throw NumericError("non-finite value in tensor of shape " + to_string(shape_));
  }
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows() on tensor of shape " + to_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols() on tensor of shape " + to_string(shape_));
  return shape_[1];
}

std::span<double> Tensor::mutable_data() {
  if (recorded()) throw ContractError("cannot mutate a tensor recorded on a tape");
  return data_;
}

double Tensor::at(std::size_t row, std::size_t col) const { return data_[row * cols() + col]; }

double Tensor::item() const {
  if (data_.size() != 1) throw ContractError("item() on tensor of shape " + to_string(shape_));
  return data_[0];
}

Tensor Tensor::detach() const {
  Tensor copy = *this;
  copy.tape_ = nullptr;
  copy.node_ = 0;
  return copy;
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  if (shape_ != other.shape_) return false;
  return std::equal(data_.begin(), data_.end(), other.data_.begin(), [](double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
  });
}

// --- Tape -------------------------------------------------------------------

Tensor Tape::leaf(const Tensor& value) { return record(value.detach(), {}); }

Tensor Tape::record(Tensor value, BackwardFn backward) {
  value.tape_ = this;
  value.node_ = nodes_.size();
  nodes_.push_back(Node{value.shape(), std::move(backward)});
  return value;
}

Gradients Tape::backward(const Tensor& root) const {
  if (root.tape() != this) throw ContractError("backward root is not recorded on this tape");
  if (root.size() != 1) {
    throw ContractError("backward root must be scalar, got shape " + to_string(root.shape()));
  }
  GradBuffers grads(nodes_.size());
  std::vector<Shape> shapes;
  shapes.reserve(nodes_.size());
  for (const auto& node : nodes_) shapes.push_back(node.shape);

  grads[root.node()].assign(1, 1.0);
  // A node is reached iff its buffer has been allocated by a consumer.
  for (std::size_t i = root.node() + 1; i-- > 0;) {
    if (grads[i].empty() || !nodes_[i].backward) continue;
    nodes_[i].backward(grads[i], grads);
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].empty()) grads[i].assign(element_count(shapes[i]), 0.0);
    for (const double v : grads[i]) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient at node " + std::to_string(i));
    }
  }
  return Gradients(this, std::move(shapes), std::move(grads));
}

Gradients::Gradients(const Tape* tape, std::vector<Shape> shapes,
                     std::vector<std::vector<double>> buffers)
    : tape_(tape), shapes_(std::move(shapes)), buffers_(std::move(buffers)) {}

Tensor Gradients::of(const Tensor& t) const {
  if (t.tape() != tape_) throw ContractError("tensor is not recorded on the differentiated tape");
  return Tensor(shapes_[t.node()], buffers_[t.node()]);
}

}  // namespace dasn
