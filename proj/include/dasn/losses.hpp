#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "dasn/autodiff.hpp"
#include "dasn/model.hpp"
#include "dasn/nn.hpp"

namespace dasn {

using Label = int;

// Probabilities are clamped at this floor before taking logs.
inline constexpr double kLogFloor = 1e-12;

// Mean binary cross-entropy of the genuine-class probability
// p = softmax(logits)[1]: -[(1-y) log(1-p) + y log p]. The two-class softmax
// gives 1-p = softmax(logits)[0], which is the form evaluated.
Tensor spoof_cls_loss(const Tensor& logits, std::span<const Label> y);
// Mean categorical cross-entropy over N^k factor classes.
Tensor sif_cls_loss(const Tensor& logits, std::span<const Label> f);
// Same functional form as spoof_cls_loss, applied to S(I^k(E(x))).
Tensor secondary_cls_loss(const Tensor& logits, std::span<const Label> y);

struct LossWeights {
  std::map<std::string, double> sif;  // lambda per active factor

  double of(const std::string& factor) const;
  static LossWeights defaults();  // identity 0.05, environment 0.08, sensor 0.08, domain 0.05
};

struct Batch {
  Tensor x;                                         // [batch x input_dim]
  std::vector<Label> y;                             // spoof labels
  std::map<std::string, std::vector<Label>> factor_labels;

  std::size_t size() const { return y.size(); }
};

// Total objective plus the value of each term, for logging.
struct ObjectiveTerms {
  Tensor total;
  double cls = 0.0;
  std::map<std::string, double> sif;   // unweighted L_sif per factor
  std::map<std::string, double> scls;  // L_scls per factor (empty when disabled)
};

struct ObjectiveOptions {
  // When false the L_scls terms are dropped (single adversarial scheme).
  bool secondary = true;
};

// Step 1 (update E, C, S):
//   L_cls + sum_k L_scls(k) + sum_k lambda_k L_sif(k) with a gradient reversal
//   between E and every head, so E ascends the SiF losses.
ObjectiveTerms step1_objective(const DasnModel& model, ParamBinding& binding, const Batch& batch,
                               const LossWeights& weights, ObjectiveOptions options = {});

// Step 2 (update I^k, D^k):
//   sum_k lambda_k L_sif(k) + sum_k L_scls(k) with a gradient reversal between
//   I^k and S, so I^k ascends the secondary spoof loss.
ObjectiveTerms step2_objective(const DasnModel& model, ParamBinding& binding, const Batch& batch,
                               const LossWeights& weights, ObjectiveOptions options = {});

}  // namespace dasn
