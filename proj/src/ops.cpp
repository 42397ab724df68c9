#include <algorithm>
#include <cmath>

#include "dasn/autodiff.hpp"
#include "dasn/error.hpp"

namespace dasn {

namespace {

using GradBuffers = Tape::GradBuffers;

// Returns the tape shared by the recorded operands, or nullptr when every
// operand is a constant.
Tape* common_tape(std::initializer_list<const Tensor*> operands) {
  Tape* tape = nullptr;
  for (const Tensor* t : operands) {
    if (!t->recorded()) continue;
    if (tape && tape != t->tape()) throw ContractError("operands are recorded on different tapes");
    tape = t->tape();
  }
  return tape;
}

std::vector<double>& grad_buffer(GradBuffers& grads, NodeId node, std::size_t n) {
  auto& buffer = grads[node];
  if (buffer.empty()) buffer.assign(n, 0.0);
  return buffer;
}

// Node id of `t` if it takes part in differentiation.
struct Input {
  bool active;
  NodeId node;
  std::size_t size;
};

Input input_of(const Tensor& t) { return Input{t.recorded(), t.node(), t.size()}; }

Tensor finish(Tape* tape, Tensor value, Tape::BackwardFn backward) {
  if (!tape) return value;
  return tape->record(std::move(value), std::move(backward));
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " + to_string(t.shape()));
  }
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  const auto A = a.data();
  const auto B = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  }
  Tape* tape = common_tape({&a, &b});
  const Input ia = input_of(a), ib = input_of(b);
  return finish(tape, Tensor({m, n}, std::move(out)),
                [ia, ib, m, k, n, A = std::vector<double>(A.begin(), A.end()),
                 B = std::vector<double>(B.begin(), B.end())](std::span<const double> g,
                                                              GradBuffers& grads) {
                  if (ia.active) {
                    // dA = G . B^T
                    auto& da = grad_buffer(grads, ia.node, ia.size);
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * B[p * n + j];
                        da[i * k + p] += s;
                      }
                  }
                  if (ib.active) {
                    // dB = A^T . G
                    auto& db = grad_buffer(grads, ib.node, ib.size);
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t p = 0; p < k; ++p) {
                        const double aip = A[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) db[p * n + j] += aip * g[i * n + j];
                      }
                  }
                });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_rank2("add_bias", a);
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.rank() != 1 || bias.size() != n) {
    throw DimensionError("add_bias: bias " + to_string(bias.shape()) + " does not fit " +
                         to_string(a.shape()));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias[j];
  Tape* tape = common_tape({&a, &bias});
  const Input ia = input_of(a), ib = input_of(bias);
  return finish(tape, Tensor(a.shape(), std::move(out)),
                [ia, ib, m, n](std::span<const double> g, GradBuffers& grads) {
                  if (ia.active) {
                    auto& da = grad_buffer(grads, ia.node, ia.size);
                    for (std::size_t i = 0; i < m * n; ++i) da[i] += g[i];
                  }
                  if (ib.active) {
                    auto& db = grad_buffer(grads, ib.node, ib.size);
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < n; ++j) db[j] += g[i * n + j];
                  }
                });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  Tape* tape = common_tape({&a, &b});
  const Input ia = input_of(a), ib = input_of(b);
  return finish(tape, Tensor(a.shape(), std::move(out)),
                [ia, ib](std::span<const double> g, GradBuffers& grads) {
                  for (const Input& in : {ia, ib}) {
                    if (!in.active) continue;
                    auto& d = grad_buffer(grads, in.node, in.size);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
                  }
                });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  Tape* tape = common_tape({&a, &b});
  const Input ia = input_of(a), ib = input_of(b);
  return finish(tape, Tensor(a.shape(), std::move(out)),
                [ia, ib, A = std::vector<double>(a.data().begin(), a.data().end()),
                 B = std::vector<double>(b.data().begin(), b.data().end())](
                    std::span<const double> g, GradBuffers& grads) {
                  if (ia.active) {
                    auto& d = grad_buffer(grads, ia.node, ia.size);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * B[i];
                  }
                  if (ib.active) {
                    auto& d = grad_buffer(grads, ib.node, ib.size);
                    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * A[i];
                  }
                });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  const Input ia = input_of(a);
  return finish(a.tape(), Tensor(a.shape(), std::move(out)),
                [ia, factor](std::span<const double> g, GradBuffers& grads) {
                  auto& d = grad_buffer(grads, ia.node, ia.size);
                  for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * factor;
                });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  std::vector<bool> active(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    active[i] = a[i] > 0.0;
    out[i] = active[i] ? a[i] : 0.0;
  }
  const Input ia = input_of(a);
  return finish(a.tape(), Tensor(a.shape(), std::move(out)),
                [ia, active = std::move(active)](std::span<const double> g, GradBuffers& grads) {
                  auto& d = grad_buffer(grads, ia.node, ia.size);
                  for (std::size_t i = 0; i < g.size(); ++i)
                    if (active[i]) d[i] += g[i];
                });
}

Tensor softmax(const Tensor& a) {
  std::size_t rows = 0, cols = 0;
  if (a.rank() == 1) {
    rows = 1;
    cols = a.size();
  } else if (a.rank() == 2) {
    rows = a.rows();
    cols = a.cols();
  } else {
    throw DimensionError("softmax: expected rank 1 or 2, got " + to_string(a.shape()));
  }
  if (cols < 2) throw ArityError("softmax: need at least 2 entries, got " + to_string(a.shape()));

  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.data().data() + r * cols;
    double* y = out.data() + r * cols;
    const double peak = *std::max_element(x, x + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - peak);
      total += y[j];
    }
    for (std::size_t j = 0; j < cols; ++j) y[j] /= total;
  }
  const Input ia = input_of(a);
  std::vector<double> saved = a.recorded() ? out : std::vector<double>{};
  return finish(a.tape(), Tensor(a.shape(), std::move(out)),
                [ia, rows, cols, Y = std::move(saved)](std::span<const double> g,
                                                       GradBuffers& grads) {
                  auto& d = grad_buffer(grads, ia.node, ia.size);
                  for (std::size_t r = 0; r < rows; ++r) {
                    const std::size_t base = r * cols;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) dot += g[base + j] * Y[base + j];
                    for (std::size_t j = 0; j < cols; ++j)
                      d[base + j] += Y[base + j] * (g[base + j] - dot);
                  }
                });
}

Tensor grl(const Tensor& a) {
  const Input ia = input_of(a);
  return finish(a.tape(), a.detach(), [ia](std::span<const double> g, GradBuffers& grads) {
    auto& d = grad_buffer(grads, ia.node, ia.size);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
  });
}

Tensor clamped_log(const Tensor& a, double floor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(a[i], floor));
  const Input ia = input_of(a);
  return finish(a.tape(), Tensor(a.shape(), std::move(out)),
                [ia, floor, A = std::vector<double>(a.data().begin(), a.data().end())](
                    std::span<const double> g, GradBuffers& grads) {
                  auto& d = grad_buffer(grads, ia.node, ia.size);
                  for (std::size_t i = 0; i < g.size(); ++i)
                    if (A[i] > floor) d[i] += g[i] / A[i];
                });
}

Tensor pick(const Tensor& a, std::span<const std::size_t> index) {
  require_rank2("pick", a);
  const std::size_t m = a.rows(), n = a.cols();
  if (index.size() != m) {
    throw DimensionError("pick: " + std::to_string(index.size()) + " indices for " + to_string(a.shape()));
  }
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (index[i] >= n) throw RangeError("pick: index " + std::to_string(index[i]) + " out of range");
    out[i] = a.at(i, index[i]);
  }
  const Input ia = input_of(a);
  return finish(a.tape(), Tensor({m}, std::move(out)),
                [ia, n, idx = std::vector<std::size_t>(index.begin(), index.end())](
                    std::span<const double> g, GradBuffers& grads) {
                  auto& d = grad_buffer(grads, ia.node, ia.size);
                  for (std::size_t i = 0; i < idx.size(); ++i) d[i * n + idx[i]] += g[i];
                });
}

Tensor reduce_sum(const Tensor& a) {
  double total = 0.0;
  for (const double v : a.data()) total += v;
  const Input ia = input_of(a);
  return finish(a.tape(), Tensor::scalar(total),
                [ia](std::span<const double> g, GradBuffers& grads) {
                  auto& d = grad_buffer(grads, ia.node, ia.size);
                  for (auto& v : d) v += g[0];
                });
}

Tensor reduce_mean(const Tensor& a) {
  if (a.size() == 0) throw ArityError("reduce_mean of an empty tensor");
  const double n = static_cast<double>(a.size());
  double total = 0.0;
  for (const double v : a.data()) total += v;
  const Input ia = input_of(a);
  return finish(a.tape(), Tensor::scalar(total / n),
                [ia, n](std::span<const double> g, GradBuffers& grads) {
                  auto& d = grad_buffer(grads, ia.node, ia.size);
                  const double share = g[0] / n;
                  for (auto& v : d) v += share;
                });
}

}  // namespace dasn
