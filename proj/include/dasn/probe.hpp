#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dasn/autodiff.hpp"
#include "dasn/losses.hpp"
#include "dasn/model.hpp"
#include "dasn/synthdata.hpp"

namespace dasn {

// Encoder outputs E(x) for every sample, in dataset order. Nothing is
// recorded and the model is not modified.
Tensor extract_features(const DasnModel& model, const FactorDataset& dataset);

struct ProbeOptions {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  double test_fraction = 0.2;
  std::size_t min_per_class = 10;
  // 0 keeps the probe linear; otherwise one relu hidden layer of this width.
  std::size_t hidden_dim = 0;
};

struct ProbeResult {
  double accuracy = 0.0;  // held-out accuracy of the linear probe
  double majority = 0.0;  // held-out accuracy of predicting the most frequent training class
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

// Multinomial logistic regression (one dense layer + softmax, Adam) on
// standardized features, or a one-hidden-layer MLP when hidden_dim > 0.
// The stratified split is drawn from `seed`.
ProbeResult train_probe(const Tensor& features, std::span<const Label> labels, std::size_t classes,
                        std::uint64_t seed, const ProbeOptions& options = {});

struct ProbeReport {
  std::map<std::string, ProbeResult> factors;
  ProbeResult spoof;
};

ProbeReport probe_model(const DasnModel& model, const FactorDataset& dataset,
                        const std::vector<std::string>& factors, std::uint64_t seed,
                        const ProbeOptions& options = {});

struct SuppressionReport {
  ProbeReport baseline;
  ProbeReport model;
  std::map<std::string, double> delta;  // baseline accuracy - model accuracy
  double spoof_delta = 0.0;
};

SuppressionReport suppression_report(const DasnModel& baseline, const DasnModel& model,
                                     const FactorDataset& dataset, const std::vector<std::string>& factors,
                                     std::uint64_t seed, const ProbeOptions& options = {});

std::string suppression_json(const SuppressionReport& report);
// One row per (model, factor): model,factor,accuracy,majority.
void write_suppression_csv(std::ostream& out, const SuppressionReport& report);
// Raw feature dump for external visualization: label columns then f_0..f_{d-1}.
void write_features_csv(std::ostream& out, const Tensor& features, const FactorDataset& dataset);

}  // namespace dasn
