#include "dasn/losses.hpp"

#include "dasn/error.hpp"

namespace dasn {

namespace {

Tensor cross_entropy(const char* what, const Tensor& logits, std::span<const Label> labels) {
  if (logits.rank() != 2) {
    throw DimensionError(std::string(what) + ": logits must be [batch x classes], got " +
                         to_string(logits.shape()));
  }
  if (labels.size() != logits.rows()) {
    throw DimensionError(std::string(what) + ": " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.rows()) + " rows");
  }
  const std::size_t classes = logits.cols();
  std::vector<std::size_t> index(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw LabelError(std::string(what) + ": label " + std::to_string(labels[i]) + " outside 0.." +
                       std::to_string(classes - 1));
    }
    index[i] = static_cast<std::size_t>(labels[i]);
  }
  return scale(reduce_mean(clamped_log(pick(softmax(logits), index), kLogFloor)), -1.0);
}

Tensor binary_cross_entropy(const char* what, const Tensor& logits, std::span<const Label> y) {
  if (logits.rank() != 2 || logits.cols() != kSpoofClasses) {
    throw DimensionError(std::string(what) + ": logits must be [batch x 2], got " + to_string(logits.shape()));
  }
  for (const Label label : y) {
    if (label != 0 && label != 1) throw LabelError(std::string(what) + ": spoof label must be 0 or 1");
  }
  return cross_entropy(what, logits, y);
}

const std::vector<Label>& labels_for(const Batch& batch, const std::string& factor) {
  const auto it = batch.factor_labels.find(factor);
  if (it == batch.factor_labels.end()) throw DataError("batch carries no labels for factor " + factor);
  if (it->second.size() != batch.size()) {
    throw DataError("factor " + factor + " has " + std::to_string(it->second.size()) + " labels for " +
                    std::to_string(batch.size()) + " samples");
  }
  return it->second;
}

// Evaluates one loss term and tags numerical failures with the term name.
template <typename Fn>
Tensor term(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericError&) {
    throw DivergenceError(0, name);
  }
}

}  // namespace

Tensor spoof_cls_loss(const Tensor& logits, std::span<const Label> y) {
  return binary_cross_entropy("spoof_cls_loss", logits, y);
}

Tensor sif_cls_loss(const Tensor& logits, std::span<const Label> f) {
  return cross_entropy("sif_cls_loss", logits, f);
}

Tensor secondary_cls_loss(const Tensor& logits, std::span<const Label> y) {
  return binary_cross_entropy("secondary_cls_loss", logits, y);
}

double LossWeights::of(const std::string& factor) const {
  const auto it = sif.find(factor);
  if (it == sif.end()) throw ConfigError("no lambda configured for factor " + factor);
  return it->second;
}

LossWeights LossWeights::defaults() {
  return LossWeights{{{"identity", 0.05}, {"environment", 0.08}, {"sensor", 0.08}, {"domain", 0.05}}};
}

ObjectiveTerms step1_objective(const DasnModel& model, ParamBinding& binding, const Batch& batch,
                               const LossWeights& weights, ObjectiveOptions options) {
  const Tensor features = term("E", [&] { return encode(model, binding, batch.x); });
  ObjectiveTerms out;
  out.total = term("L_cls", [&] { return spoof_cls_loss(classify_spoof(model, binding, features), batch.y); });
  out.cls = out.total.item();
  for (const auto& factor : model.config().factors) {
    const auto& k = factor.name;
    const auto& f = labels_for(batch, k);
    if (options.secondary) {
      const Tensor scls = term("L_scls." + k, [&] {
        return secondary_cls_loss(secondary_classify(model, binding, k, features, false), batch.y);
      });
      out.scls[k] = scls.item();
      out.total = add(out.total, scls);
    }
    const Tensor sif = term("L_sif." + k, [&] {
      return sif_cls_loss(head_forward(model, binding, k, features, true).sif_logits, f);
    });
    out.sif[k] = sif.item();
    out.total = add(out.total, scale(sif, weights.of(k)));
  }
  return out;
}

ObjectiveTerms step2_objective(const DasnModel& model, ParamBinding& binding, const Batch& batch,
                               const LossWeights& weights, ObjectiveOptions options) {
  ObjectiveTerms out;
  out.total = Tensor::scalar(0.0);
  if (model.config().factors.empty()) return out;
  const Tensor features = term("E", [&] { return encode(model, binding, batch.x); });
  bool first = true;
  const auto accumulate = [&](const Tensor& t) {
    out.total = first ? t : add(out.total, t);
    first = false;
  };
  for (const auto& factor : model.config().factors) {
    const auto& k = factor.name;
    const auto& f = labels_for(batch, k);
    const Tensor sif = term("L_sif." + k, [&] {
      return sif_cls_loss(head_forward(model, binding, k, features, false).sif_logits, f);
    });
    out.sif[k] = sif.item();
    accumulate(scale(sif, weights.of(k)));
    if (options.secondary) {
      const Tensor scls = term("L_scls." + k, [&] {
        return secondary_cls_loss(secondary_classify(model, binding, k, features, true), batch.y);
      });
      out.scls[k] = scls.item();
      accumulate(scls);
    }
  }
  return out;
}

}  // namespace dasn
