#include "dasn/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "dasn/error.hpp"
#include "dasn/random.hpp"

namespace dasn {

DenseLayer make_dense(std::string name, std::size_t in, std::size_t out, Activation activation) {
  return DenseLayer{std::move(name), Tensor::zeros({in, out}), Tensor::zeros({out}), activation};
}

std::size_t ParamGroup::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

void xavier_init(ParamGroup& group, std::uint64_t seed) {
  Rng rng(derive_seed(seed, group.name));
  for (auto& layer : group.layers) {
    const double fan_in = static_cast<double>(layer.in_features());
    const double fan_out = static_cast<double>(layer.out_features());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : layer.weight.mutable_data()) w = rng.uniform(-limit, limit);
    for (auto& b : layer.bias.mutable_data()) b = 0.0;
  }
}

Tensor ParamBinding::bind(const std::string& name, const Tensor& value) {
  if (!tape_) return value;
  auto it = bound_.find(name);
  if (it == bound_.end()) it = bound_.emplace(name, tape_->leaf(value)).first;
  return it->second;
}

GradientMap ParamBinding::gradients(const Tensor& root) const {
  if (!tape_) throw ContractError("gradients requested from an unrecorded binding");
  const Gradients grads = tape_->backward(root);
  GradientMap out;
  for (const auto& [name, leaf] : bound_) out.emplace(name, grads.of(leaf));
  return out;
}

Tensor dense_forward(ParamBinding& binding, const DenseLayer& layer, const Tensor& x) {
  if (x.rank() != 2 || x.cols() != layer.in_features()) {
    throw DimensionError("layer " + layer.name + ": input " + to_string(x.shape()) +
                         " does not fit weight " + to_string(layer.weight.shape()));
  }
  const Tensor w = binding.bind(layer.name + ".weight", layer.weight);
  const Tensor b = binding.bind(layer.name + ".bias", layer.bias);
  Tensor y = add_bias(matmul(x, w), b);
  return layer.activation == Activation::relu ? relu(y) : y;
}

Tensor mlp_forward(ParamBinding& binding, std::span<const DenseLayer> layers, const Tensor& x) {
  Tensor h = x;
  for (const auto& layer : layers) h = dense_forward(binding, layer, h);
  return h;
}

void adam_step(AdamState& state, std::span<ParamGroup* const> groups, const GradientMap& grads) {
  // Validate before touching anything so a contract error leaves the state intact.
  for (const ParamGroup* group : groups) {
    for_each_parameter(*group, [&](const std::string& name, const Tensor& param) {
      const auto it = grads.find(name);
      if (it == grads.end()) throw ContractError("adam_step: no gradient for parameter " + name);
      if (it->second.shape() != param.shape()) {
        throw DimensionError("adam_step: gradient shape " + to_string(it->second.shape()) +
                             " does not match parameter " + name + " " + to_string(param.shape()));
      }
    });
  }

  const auto& opt = state.options;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(opt.beta1, t);
  const double correction2 = 1.0 - std::pow(opt.beta2, t);

  for (ParamGroup* group : groups) {
    for_each_parameter(*group, [&](const std::string& name, Tensor& param) {
      const auto g = grads.at(name).data();
      auto& m = state.first_moment[name];
      auto& v = state.second_moment[name];
      if (m.empty()) m.assign(g.size(), 0.0);
      if (v.empty()) v.assign(g.size(), 0.0);
      auto p = param.mutable_data();
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
        v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        p[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
        if (!std::isfinite(p[i])) throw NumericError("adam_step: parameter " + name + " became non-finite");
      }
    });
  }
}

// --- checkpoint image ---------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'D', 'A', 'S', 'N'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void little_endian(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    const U u = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  template <typename T>
  T little_endian() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    need(sizeof(U));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) u |= static_cast<U>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return std::bit_cast<T>(u);
  }
  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const NamedTensors& tensors) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.little_endian<std::uint32_t>(kCheckpointVersion);
  w.little_endian<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    if (name.size() > 0xffff) throw FormatError("parameter name too long: " + name);
    w.little_endian<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.little_endian<std::uint8_t>(static_cast<std::uint8_t>(tensor.rank()));
    for (const auto extent : tensor.shape()) w.little_endian<std::uint32_t>(static_cast<std::uint32_t>(extent));
    for (const double v : tensor.data()) w.little_endian<double>(v);
  }
  return w.take();
}

NamedTensors decode_checkpoint(std::span<const std::uint8_t> image) {
  Reader r(image);
  if (r.string(4) != std::string(kMagic, 4)) throw FormatError("bad checkpoint magic");
  const auto version = r.little_endian<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.little_endian<std::uint32_t>();
  NamedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.little_endian<std::uint16_t>();
    std::string name = r.string(name_len);
    const auto ndim = r.little_endian<std::uint8_t>();
    Shape shape(ndim);
    for (auto& extent : shape) {
      extent = r.little_endian<std::uint32_t>();
      if (extent == 0) throw FormatError("zero extent in checkpoint entry " + name);
    }
    const std::size_t n = element_count(shape);
    r.need(n * 8);
    std::vector<double> data(n);
    for (auto& v : data) v = r.little_endian<double>();
    try {
      Tensor t(std::move(shape), std::move(data));
      out.emplace_back(std::move(name), std::move(t));
    } catch (const NumericError&) {
      throw FormatError("non-finite value in checkpoint entry " + name);
    }
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint payload");
  return out;
}

NamedTensors collect_parameters(std::span<const ParamGroup* const> groups) {
  NamedTensors out;
  for (const ParamGroup* group : groups) {
    for_each_parameter(*group, [&](const std::string& name, const Tensor& t) { out.emplace_back(name, t); });
  }
  return out;
}

std::vector<std::uint8_t> snapshot(std::span<const ParamGroup* const> groups) {
  return encode_checkpoint(collect_parameters(groups));
}

void restore(std::span<const std::uint8_t> image, std::span<ParamGroup* const> groups) {
  const NamedTensors stored = decode_checkpoint(image);
  std::size_t i = 0;
  for (const ParamGroup* group : groups) {
    for_each_parameter(*group, [&](const std::string& name, const Tensor& t) {
      if (i >= stored.size()) throw FormatError("checkpoint is missing parameter " + name);
      if (stored[i].first != name || stored[i].second.shape() != t.shape()) {
        throw FormatError("checkpoint entry " + stored[i].first + " " + to_string(stored[i].second.shape()) +
                          " does not match parameter " + name + " " + to_string(t.shape()));
      }
      ++i;
    });
  }
  if (i != stored.size()) throw FormatError("checkpoint has extra parameters");
  i = 0;
  for (ParamGroup* group : groups) {
    for_each_parameter(*group, [&](const std::string&, Tensor& t) { t = stored[i++].second; });
  }
}

}  // namespace dasn
