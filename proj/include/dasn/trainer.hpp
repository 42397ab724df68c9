#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dasn/losses.hpp"
#include "dasn/model.hpp"
#include "dasn/nn.hpp"
#include "dasn/synthdata.hpp"

namespace dasn {

// baseline: L_cls only, updates {E, C}.
// asn:      first adversarial scheme only (no L_scls terms).
// asn_d:    asn with a single pseudo-factor "domain" (source-domain index).
// dasn:     both adversarial schemes.
enum class Mode { baseline, asn, asn_d, dasn };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct TrainConfig {
  Mode mode = Mode::dasn;
  std::vector<std::string> factors = {"identity", "environment", "sensor"};
  LossWeights weights = LossWeights::defaults();
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 50;
  std::uint64_t seed = 1;
  std::size_t feature_dim = 32;
  std::size_t hidden_dim = 32;

  // Factors actually trained against under this mode.
  std::vector<std::string> active_factors() const;
  bool uses_secondary() const { return mode == Mode::dasn; }
};

// Per-iteration loss values, all taken from the Step 1 forward pass.
struct LossHistory {
  std::vector<std::string> factors;
  bool secondary = false;
  std::vector<double> cls;
  std::map<std::string, std::vector<double>> sif;
  std::map<std::string, std::vector<double>> scls;

  std::size_t size() const { return cls.size(); }
};

void write_history_csv(std::ostream& out, const LossHistory& history);

struct TrainState {
  DasnModel model;
  AdamState step1;  // E, C, S
  AdamState step2;  // I^k, D^k
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  LossHistory history;
};

// Fresh state for `config` on a dataset with the given label spaces.
TrainState init_state(const TrainConfig& config, const FactorDataset& dataset);

// Called with the step number (1 or 2) right after that step's update.
using StepObserver = std::function<void(int step, const DasnModel& model)>;

// Step 1 then Step 2 on the same batch.
void train_iteration(TrainState& state, const TrainConfig& config, const Batch& batch,
                     const StepObserver& observer = {});

// Runs epochs state.epoch .. config.epochs-1. Each epoch visits the dataset
// in an order derived from (seed, epoch) alone, so a state restored at an
// epoch boundary continues exactly.
void train_epochs(TrainState& state, const TrainConfig& config, const FactorDataset& dataset,
                  const std::function<void(const TrainState&)>& on_epoch = {});

struct TrainResult {
  DasnModel model;
  LossHistory history;
};

TrainResult train(const TrainConfig& config, const FactorDataset& dataset);

// Training state image in the checkpoint container format: model parameters
// followed by optimizer moments, counters and the loss history.
std::vector<std::uint8_t> encode_train_state(const TrainState& state);
TrainState decode_train_state(std::span<const std::uint8_t> image);

struct TrendSummary {
  double slope = 0.0;         // least-squares slope of window means per iteration
  double monotonicity = 0.0;  // fraction of window-to-window increases
  std::size_t windows = 0;
};

struct DivergenceOptions {
  std::size_t window = 20;       // iterations per window
  double start_fraction = 0.0;   // leading fraction of history to skip
};

TrendSummary trend(std::span<const double> values, const DivergenceOptions& options);
// Trend of every L_sif series in the history.
std::map<std::string, TrendSummary> divergence_report(const LossHistory& history,
                                                      const DivergenceOptions& options = {});

}  // namespace dasn
