#include "dasn/model.hpp"

#include <algorithm>
#include <map>

#include "dasn/error.hpp"

namespace dasn {

void DasnModel::build(DasnConfig config) {
  for (const auto& f : config.factors) {
    if (f.classes < 2) {
      throw ConfigError("factor " + f.name + " needs at least 2 classes, got " + std::to_string(f.classes));
    }
  }
  for (std::size_t i = 0; i < config.factors.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (config.factors[i].name == config.factors[j].name) {
        throw ConfigError("duplicate factor " + config.factors[i].name);
      }
    }
  }
  config_ = std::move(config);
  const auto in = config_.input_dim, feat = config_.feature_dim, hid = config_.hidden_dim;
  if (in == 0 || feat == 0 || hid == 0) throw ConfigError("model dimensions must be positive");

  encoder_ = ParamGroup{"E",
                        {make_dense("E.0", in, hid, Activation::relu),
                         make_dense("E.1", hid, feat, Activation::none)}};
  classifier_ = ParamGroup{"C", {make_dense("C.0", feat, kSpoofClasses, Activation::none)}};
  secondary_ = ParamGroup{"S", {make_dense("S.0", feat, kSpoofClasses, Activation::none)}};
  intermediates_.clear();
  discriminators_.clear();
  for (const auto& f : config_.factors) {
    const std::string i_name = "I." + f.name;
    const std::string d_name = "D." + f.name;
    intermediates_.push_back(ParamGroup{i_name, {make_dense(i_name + ".0", feat, feat, Activation::relu)}});
    discriminators_.push_back(ParamGroup{d_name,
                                         {make_dense(d_name + ".0", feat, hid, Activation::relu),
                                          make_dense(d_name + ".1", hid, f.classes, Activation::none)}});
  }
}

DasnModel::DasnModel(DasnConfig config, std::uint64_t seed) {
  build(std::move(config));
  for (ParamGroup* g : groups()) xavier_init(*g, seed);
}

DasnModel DasnModel::zeros(DasnConfig config) {
  DasnModel model;
  model.build(std::move(config));
  return model;
}

DasnModel DasnModel::from_parameters(const NamedTensors& params) {
  std::map<std::string, Shape> shapes;
  std::vector<std::string> factor_order;
  for (const auto& [name, t] : params) {
    shapes[name] = t.shape();
    if (name.starts_with("I.") && name.ends_with(".0.weight")) {
      factor_order.push_back(name.substr(2, name.size() - 2 - std::string(".0.weight").size()));
    }
  }
  const auto shape_of = [&](const std::string& name) -> const Shape& {
    const auto it = shapes.find(name);
    if (it == shapes.end() || it->second.size() != 2) {
      throw FormatError("checkpoint lacks a rank-2 entry " + name);
    }
    return it->second;
  };

  DasnConfig config;
  config.input_dim = shape_of("E.0.weight")[0];
  config.hidden_dim = shape_of("E.0.weight")[1];
  config.feature_dim = shape_of("E.1.weight")[1];
  for (const auto& k : factor_order) {
    config.factors.push_back(FactorSpec{k, shape_of("D." + k + ".1.weight")[1]});
  }

  DasnModel model;
  try {
    model.build(config);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint describes an invalid model: ") + e.what());
  }
  if (!shapes.contains("S.0.weight")) model.secondary_.reset();

  const auto image = encode_checkpoint(params);
  restore(image, model.groups());
  return model;
}

bool DasnModel::has_factor(const std::string& name) const {
  return std::any_of(config_.factors.begin(), config_.factors.end(),
                     [&](const FactorSpec& f) { return f.name == name; });
}

std::size_t DasnModel::factor_index(const std::string& name) const {
  for (std::size_t i = 0; i < config_.factors.size(); ++i) {
    if (config_.factors[i].name == name) return i;
  }
  throw ConfigError("factor " + name + " is not active in this model");
}

ParamGroup& DasnModel::secondary() {
  if (!secondary_) throw ConfigError("model has no secondary classifier");
  return *secondary_;
}

const ParamGroup& DasnModel::secondary() const {
  if (!secondary_) throw ConfigError("model has no secondary classifier");
  return *secondary_;
}

ParamGroup& DasnModel::intermediate(const std::string& factor) { return intermediates_[factor_index(factor)]; }
const ParamGroup& DasnModel::intermediate(const std::string& factor) const {
  return intermediates_[factor_index(factor)];
}
ParamGroup& DasnModel::discriminator(const std::string& factor) { return discriminators_[factor_index(factor)]; }
const ParamGroup& DasnModel::discriminator(const std::string& factor) const {
  return discriminators_[factor_index(factor)];
}

std::vector<ParamGroup*> DasnModel::groups() {
  std::vector<ParamGroup*> out{&encoder_, &classifier_};
  if (secondary_) out.push_back(&*secondary_);
  for (std::size_t i = 0; i < intermediates_.size(); ++i) {
    out.push_back(&intermediates_[i]);
    out.push_back(&discriminators_[i]);
  }
  return out;
}

std::vector<const ParamGroup*> DasnModel::groups() const {
  auto mutable_groups = const_cast<DasnModel*>(this)->groups();
  return {mutable_groups.begin(), mutable_groups.end()};
}

std::vector<ParamGroup*> DasnModel::groups(const std::vector<std::string>& names) {
  const auto all = groups();
  std::vector<ParamGroup*> out;
  for (const auto& name : names) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const ParamGroup* g) { return g->name == name; });
    if (it == all.end()) throw ConfigError("unknown parameter group " + name);
    out.push_back(*it);
  }
  return out;
}

std::vector<const ParamGroup*> DasnModel::groups(const std::vector<std::string>& names) const {
  auto mutable_groups = const_cast<DasnModel*>(this)->groups(names);
  return {mutable_groups.begin(), mutable_groups.end()};
}

std::vector<std::string> DasnModel::group_names() const {
  std::vector<std::string> names;
  for (const ParamGroup* g : groups()) names.push_back(g->name);
  return names;
}

NamedTensors DasnModel::parameters() const { return collect_parameters(groups()); }

DasnModel DasnModel::without_heads() const {
  DasnModel pruned;
  pruned.config_ = config_;
  pruned.config_.factors.clear();
  pruned.encoder_ = encoder_;
  pruned.classifier_ = classifier_;
  return pruned;
}

// --- forward paths ------------------------------------------------------------

Tensor encode(const DasnModel& model, ParamBinding& binding, const Tensor& x) {
  if (x.rank() != 2 || x.cols() != model.config().input_dim) {
    throw DimensionError("encode: input " + to_string(x.shape()) + " but model expects " +
                         std::to_string(model.config().input_dim) + " columns");
  }
  return mlp_forward(binding, model.encoder().layers, x);
}

Tensor classify_spoof(const DasnModel& model, ParamBinding& binding, const Tensor& features) {
  return mlp_forward(binding, model.classifier().layers, features);
}

HeadOutput head_forward(const DasnModel& model, ParamBinding& binding, const std::string& factor,
                        const Tensor& features, bool reverse_into_encoder) {
  const ParamGroup& i_group = model.intermediate(factor);
  const ParamGroup& d_group = model.discriminator(factor);
  const Tensor input = reverse_into_encoder ? grl(features) : features;
  Tensor intermediate = mlp_forward(binding, i_group.layers, input);
  Tensor logits = mlp_forward(binding, d_group.layers, intermediate);
  return HeadOutput{std::move(intermediate), std::move(logits)};
}

Tensor secondary_classify(const DasnModel& model, ParamBinding& binding, const std::string& factor,
                          const Tensor& features, bool reverse_into_intermediate) {
  const Tensor intermediate = mlp_forward(binding, model.intermediate(factor).layers, features);
  const Tensor input = reverse_into_intermediate ? grl(intermediate) : intermediate;
  return mlp_forward(binding, model.secondary().layers, input);
}

std::vector<double> infer(const DasnModel& model, const Tensor& x) {
  ParamBinding binding(nullptr);
  const Tensor probs = softmax(classify_spoof(model, binding, encode(model, binding, x)));
  std::vector<double> out(probs.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probs.at(i, kGenuineClass);
  return out;
}

}  // namespace dasn
