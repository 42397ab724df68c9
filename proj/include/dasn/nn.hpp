#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dasn/autodiff.hpp"

namespace dasn {

enum class Activation { none, relu };

struct DenseLayer {
  std::string name;  // dotted prefix, e.g. "E.0"
  Tensor weight;     // [in x out]
  Tensor bias;       // [out]
  Activation activation = Activation::none;

  std::size_t in_features() const { return weight.shape()[0]; }
  std::size_t out_features() const { return weight.shape()[1]; }
};

DenseLayer make_dense(std::string name, std::size_t in, std::size_t out, Activation activation);

// A named set of layers that is updated (or frozen) as a unit.
struct ParamGroup {
  std::string name;
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
};

// Calls fn(name, tensor&) for every parameter in layer order, weight before
// bias.
template <typename Fn>
void for_each_parameter(ParamGroup& group, Fn&& fn) {
  for (auto& layer : group.layers) {
    fn(layer.name + ".weight", layer.weight);
    fn(layer.name + ".bias", layer.bias);
  }
}

template <typename Fn>
void for_each_parameter(const ParamGroup& group, Fn&& fn) {
  for (const auto& layer : group.layers) {
    fn(layer.name + ".weight", layer.weight);
    fn(layer.name + ".bias", layer.bias);
  }
}

// Xavier-uniform weights, zero biases. The stream is derived from the seed
// and the group name, so a group's initial values do not depend on which
// other groups exist.
void xavier_init(ParamGroup& group, std::uint64_t seed);

using GradientMap = std::map<std::string, Tensor>;

// Maps parameters onto a tape for one forward pass. Each parameter becomes a
// single leaf no matter how often it is used. Without a tape the binding is
// a pass-through and nothing is recorded.
class ParamBinding {
 public:
  explicit ParamBinding(Tape* tape) : tape_(tape) {}

  Tensor bind(const std::string& name, const Tensor& value);
  Tape* tape() const { return tape_; }

  // Gradient of `root` for every bound parameter.
  GradientMap gradients(const Tensor& root) const;

 private:
  Tape* tape_;
  std::map<std::string, Tensor> bound_;
};

Tensor dense_forward(ParamBinding& binding, const DenseLayer& layer, const Tensor& x);
Tensor mlp_forward(ParamBinding& binding, std::span<const DenseLayer> layers, const Tensor& x);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;
};

// One bias-corrected Adam update applied to the listed groups only.
void adam_step(AdamState& state, std::span<ParamGroup* const> groups, const GradientMap& grads);

// --- checkpoint image ---------------------------------------------------------

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const NamedTensors& tensors);
NamedTensors decode_checkpoint(std::span<const std::uint8_t> image);

NamedTensors collect_parameters(std::span<const ParamGroup* const> groups);
std::vector<std::uint8_t> snapshot(std::span<const ParamGroup* const> groups);
// Overwrites the groups' parameters. Names, order and shapes must match.
void restore(std::span<const std::uint8_t> image, std::span<ParamGroup* const> groups);

}  // namespace dasn
