#include "dasn/probe.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "json.hpp"

#include "dasn/error.hpp"
#include "dasn/nn.hpp"
#include "dasn/random.hpp"

namespace dasn {

Tensor extract_features(const DasnModel& model, const FactorDataset& dataset) {
  if (dataset.input_dim != model.config().input_dim) {
    throw DimensionError("dataset input_dim " + std::to_string(dataset.input_dim) + " does not match model input " +
                         std::to_string(model.config().input_dim));
  }
  ParamBinding binding(nullptr);
  return encode(model, binding, dataset.inputs());
}

namespace {

Tensor standardized(const Tensor& features, std::span<const std::size_t> rows, const std::vector<double>& mean,
                    const std::vector<double>& scale) {
  const std::size_t d = features.cols();
  std::vector<double> out;
  out.reserve(rows.size() * d);
  for (const auto r : rows) {
    for (std::size_t j = 0; j < d; ++j) out.push_back((features.at(r, j) - mean[j]) / scale[j]);
  }
  return Tensor::matrix(rows.size(), d, std::move(out));
}

}  // namespace

ProbeResult train_probe(const Tensor& features, std::span<const Label> labels, std::size_t classes,
                        std::uint64_t seed, const ProbeOptions& options) {
  if (features.rank() != 2 || features.rows() != labels.size()) {
    throw DimensionError("train_probe: features " + to_string(features.shape()) + " for " +
                         std::to_string(labels.size()) + " labels");
  }
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw LabelError("train_probe: label " + std::to_string(labels[i]) + " outside the label space");
    }
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::size_t present = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (by_class[c].empty()) continue;
    ++present;
    if (by_class[c].size() < options.min_per_class) {
      throw DataError("train_probe: class " + std::to_string(c) + " has only " + std::to_string(by_class[c].size()) +
                      " samples (need " + std::to_string(options.min_per_class) + ")");
    }
  }
  if (present < 2) throw DataError("train_probe: need at least two classes");

  // Stratified split.
  Rng rng(derive_seed(seed, "probe-split"));
  std::vector<std::size_t> train_rows, test_rows;
  for (auto& members : by_class) {
    if (members.empty()) continue;
    rng.shuffle(members);
    const auto n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(members.size()))));
    test_rows.insert(test_rows.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_rows.insert(train_rows.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());

  const std::size_t d = features.cols();
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (const auto r : train_rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += features.at(r, j);
  for (auto& m : mean) m /= static_cast<double>(train_rows.size());
  for (const auto r : train_rows)
    for (std::size_t j = 0; j < d; ++j) scale[j] += (features.at(r, j) - mean[j]) * (features.at(r, j) - mean[j]);
  for (auto& s : scale) {
    s = std::sqrt(s / static_cast<double>(train_rows.size()));
    if (s < 1e-12) s = 1.0;
  }

  ParamGroup probe{"P", {}};
  if (options.hidden_dim == 0) {
    probe.layers.push_back(make_dense("P.0", d, classes, Activation::none));
  } else {
    probe.layers.push_back(make_dense("P.0", d, options.hidden_dim, Activation::relu));
    probe.layers.push_back(make_dense("P.1", options.hidden_dim, classes, Activation::none));
  }
  xavier_init(probe, derive_seed(seed, "probe-init"));
  AdamState adam;
  adam.options.learning_rate = options.learning_rate;
  ParamGroup* const groups[] = {&probe};

  const Tensor train_x = standardized(features, train_rows, mean, scale);
  std::vector<Label> train_y;
  for (const auto r : train_rows) train_y.push_back(labels[r]);

  std::vector<std::size_t> order(train_rows.size());
  Rng batch_rng(derive_seed(seed, "probe-batches"));
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    batch_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::vector<double> xb;
      std::vector<Label> yb;
      xb.reserve((end - start) * d);
      for (std::size_t i = start; i < end; ++i) {
        const auto row = train_x.data().subspan(order[i] * d, d);
        xb.insert(xb.end(), row.begin(), row.end());
        yb.push_back(train_y[order[i]]);
      }
      Tape tape;
      ParamBinding binding(&tape);
      const Tensor logits = mlp_forward(binding, probe.layers, Tensor::matrix(end - start, d, std::move(xb)));
      const Tensor loss = sif_cls_loss(logits, yb);
      adam_step(adam, groups, binding.gradients(loss));
    }
  }

  ParamBinding inference(nullptr);
  const Tensor logits = mlp_forward(inference, probe.layers, standardized(features, test_rows, mean, scale));
  std::vector<std::size_t> train_counts(classes, 0);
  for (const Label y : train_y) ++train_counts[static_cast<std::size_t>(y)];
  const auto majority_class =
      static_cast<Label>(std::max_element(train_counts.begin(), train_counts.end()) - train_counts.begin());

  std::size_t correct = 0, majority_correct = 0;
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (logits.at(i, c) > logits.at(i, best)) best = c;
    }
    const Label truth = labels[test_rows[i]];
    if (static_cast<Label>(best) == truth) ++correct;
    if (majority_class == truth) ++majority_correct;
  }
  ProbeResult result;
  result.accuracy = static_cast<double>(correct) / static_cast<double>(test_rows.size());
  result.majority = static_cast<double>(majority_correct) / static_cast<double>(test_rows.size());
  result.train_size = train_rows.size();
  result.test_size = test_rows.size();
  return result;
}

ProbeReport probe_model(const DasnModel& model, const FactorDataset& dataset, const std::vector<std::string>& factors,
                        std::uint64_t seed, const ProbeOptions& options) {
  const Tensor features = extract_features(model, dataset);
  ProbeReport report;
  for (const auto& k : factors) {
    report.factors[k] = train_probe(features, dataset.labels(k), dataset.class_count(k), derive_seed(seed, k), options);
  }
  report.spoof = train_probe(features, dataset.labels("spoof"), 2, derive_seed(seed, "spoof"), options);
  return report;
}

SuppressionReport suppression_report(const DasnModel& baseline, const DasnModel& model, const FactorDataset& dataset,
                                     const std::vector<std::string>& factors, std::uint64_t seed,
                                     const ProbeOptions& options) {
  if (baseline.config().input_dim != model.config().input_dim) {
    throw DimensionError("suppression_report: models disagree on input_dim");
  }
  SuppressionReport report;
  report.baseline = probe_model(baseline, dataset, factors, seed, options);
  report.model = probe_model(model, dataset, factors, seed, options);
  for (const auto& k : factors) {
    report.delta[k] = report.baseline.factors.at(k).accuracy - report.model.factors.at(k).accuracy;
  }
  report.spoof_delta = report.baseline.spoof.accuracy - report.model.spoof.accuracy;
  return report;
}

namespace {

nlohmann::ordered_json probe_json(const ProbeReport& r) {
  nlohmann::ordered_json j;
  for (const auto& [k, p] : r.factors) j[k] = {{"accuracy", p.accuracy}, {"majority", p.majority}};
  j["spoof"] = {{"accuracy", r.spoof.accuracy}, {"majority", r.spoof.majority}};
  return j;
}

}  // namespace

std::string suppression_json(const SuppressionReport& report) {
  nlohmann::ordered_json j;
  j["baseline"] = probe_json(report.baseline);
  j["model"] = probe_json(report.model);
  nlohmann::ordered_json delta;
  for (const auto& [k, v] : report.delta) delta[k] = v;
  delta["spoof"] = report.spoof_delta;
  j["delta"] = std::move(delta);
  return j.dump(2) + "\n";
}

void write_suppression_csv(std::ostream& out, const SuppressionReport& report) {
  out << "model,factor,accuracy,majority\n";
  const auto rows = [&](const char* name, const ProbeReport& r) {
    for (const auto& [k, p] : r.factors) {
      out << name << ',' << k << ',' << format_double(p.accuracy) << ',' << format_double(p.majority) << '\n';
    }
    out << name << ",spoof," << format_double(r.spoof.accuracy) << ',' << format_double(r.spoof.majority) << '\n';
  };
  rows("baseline", report.baseline);
  rows("model", report.model);
}

void write_features_csv(std::ostream& out, const Tensor& features, const FactorDataset& dataset) {
  out << "domain,y,f_id,f_env,f_sens";
  for (std::size_t j = 0; j < features.cols(); ++j) out << ",f_" << j;
  out << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset.samples[i];
    out << s.domain << ',' << s.y << ',' << s.identity << ',' << s.environment << ',' << s.sensor;
    for (std::size_t j = 0; j < features.cols(); ++j) out << ',' << format_double(features.at(i, j));
    out << '\n';
  }
}

}  // namespace dasn
