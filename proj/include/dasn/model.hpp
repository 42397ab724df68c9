#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dasn/autodiff.hpp"
#include "dasn/nn.hpp"

namespace dasn {

// Spoof labels: 1 = genuine (live face), 0 = spoof (attack). Scores are the
// genuine-class probability.
inline constexpr std::size_t kSpoofClasses = 2;
inline constexpr std::size_t kGenuineClass = 1;

struct FactorSpec {
  std::string name;     // identity, environment, sensor or domain
  std::size_t classes;  // N^k, at least 2
};

struct DasnConfig {
  std::size_t input_dim = 24;
  std::size_t feature_dim = 32;
  std::size_t hidden_dim = 32;
  std::vector<FactorSpec> factors;
};

// Encoder E, spoof classifier C, shared secondary classifier S and one
// discrimination head (I^k, D^k) per factor. Layer shapes:
//   E   : input -> hidden (relu) -> feature
//   C, S: feature -> 2
//   I^k : feature -> feature (relu)
//   D^k : feature -> hidden (relu) -> N^k
class DasnModel {
 public:
  // Xavier-initialized model.
  DasnModel(DasnConfig config, std::uint64_t seed);
  // All parameters zero.
  static DasnModel zeros(DasnConfig config);
  // Rebuilds the architecture from parameter names and shapes, then loads
  // the values. Throws FormatError if the entries do not form a model.
  static DasnModel from_parameters(const NamedTensors& params);

  const DasnConfig& config() const { return config_; }
  bool has_factor(const std::string& name) const;
  bool has_secondary() const { return secondary_.has_value(); }

  ParamGroup& encoder() { return encoder_; }
  const ParamGroup& encoder() const { return encoder_; }
  ParamGroup& classifier() { return classifier_; }
  const ParamGroup& classifier() const { return classifier_; }
  ParamGroup& secondary();
  const ParamGroup& secondary() const;
  ParamGroup& intermediate(const std::string& factor);
  const ParamGroup& intermediate(const std::string& factor) const;
  ParamGroup& discriminator(const std::string& factor);
  const ParamGroup& discriminator(const std::string& factor) const;

  // Every group, in checkpoint order: E, C, S, then I.<k>, D.<k> per factor.
  std::vector<ParamGroup*> groups();
  std::vector<const ParamGroup*> groups() const;
  // Looks groups up by name ("E", "C", "S", "I.identity", ...).
  std::vector<ParamGroup*> groups(const std::vector<std::string>& names);
  std::vector<const ParamGroup*> groups(const std::vector<std::string>& names) const;
  std::vector<std::string> group_names() const;

  NamedTensors parameters() const;

  // Copy holding only E and C: the inference path.
  DasnModel without_heads() const;

 private:
  DasnModel() = default;
  void build(DasnConfig config);
  std::size_t factor_index(const std::string& name) const;

  DasnConfig config_;
  ParamGroup encoder_;
  ParamGroup classifier_;
  std::optional<ParamGroup> secondary_;
  std::vector<ParamGroup> intermediates_;
  std::vector<ParamGroup> discriminators_;
};

struct HeadOutput {
  Tensor intermediate;  // I^k(features) [batch x feature_dim]
  Tensor sif_logits;    // D^k(intermediate) [batch x N^k]
};

Tensor encode(const DasnModel& model, ParamBinding& binding, const Tensor& x);
Tensor classify_spoof(const DasnModel& model, ParamBinding& binding, const Tensor& features);
// With `reverse_into_encoder` a gradient reversal sits between the features
// and I^k.
HeadOutput head_forward(const DasnModel& model, ParamBinding& binding, const std::string& factor,
                        const Tensor& features, bool reverse_into_encoder);
// S(I^k(features)); with `reverse_into_intermediate` a gradient reversal sits
// between I^k and S.
Tensor secondary_classify(const DasnModel& model, ParamBinding& binding, const std::string& factor,
                          const Tensor& features, bool reverse_into_intermediate);

// Genuine-class probability softmax(C(E(x)))[1] per row. Uses E and C only.
std::vector<double> infer(const DasnModel& model, const Tensor& x);

}  // namespace dasn
