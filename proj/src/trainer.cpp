#include "dasn/trainer.hpp"

#include <algorithm>
#include <ostream>

#include "dasn/error.hpp"
#include "dasn/random.hpp"

namespace dasn {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::baseline: return "baseline";
    case Mode::asn: return "ASN";
    case Mode::asn_d: return "ASN_d";
    case Mode::dasn: return "DASN";
  }
  return "?";
}

Mode parse_mode(const std::string& text) {
  if (text == "baseline") return Mode::baseline;
  if (text == "ASN") return Mode::asn;
  if (text == "ASN_d") return Mode::asn_d;
  if (text == "DASN") return Mode::dasn;
  throw ConfigError("unknown mode " + text + " (expected baseline, ASN, ASN_d or DASN)");
}

std::vector<std::string> TrainConfig::active_factors() const {
  switch (mode) {
    case Mode::baseline: return {};
    case Mode::asn_d: return {"domain"};
    default: return factors;
  }
}

void write_history_csv(std::ostream& out, const LossHistory& history) {
  out << "iteration,L_cls";
  for (const auto& k : history.factors) {
    out << ",L_sif." << k;
    if (history.secondary) out << ",L_scls." << k;
  }
  out << '\n';
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << i << ',' << format_double(history.cls[i]);
    for (const auto& k : history.factors) {
      out << ',' << format_double(history.sif.at(k)[i]);
      if (history.secondary) out << ',' << format_double(history.scls.at(k)[i]);
    }
    out << '\n';
  }
}

namespace {

void validate(const TrainConfig& config) {
  if (config.mode == Mode::baseline && !config.factors.empty()) {
    throw ConfigError("baseline mode takes no factors");
  }
  if ((config.mode == Mode::asn || config.mode == Mode::dasn) && config.factors.empty()) {
    throw ConfigError(to_string(config.mode) + " mode needs at least one factor");
  }
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(config.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  for (const auto& k : config.active_factors()) {
    if (config.weights.of(k) < 0.0) throw ConfigError("lambda for " + k + " must be non-negative");
  }
}

std::vector<std::string> step1_groups(const DasnModel& model, const TrainConfig& config) {
  std::vector<std::string> names{"E", "C"};
  if (config.uses_secondary() && !model.config().factors.empty()) names.push_back("S");
  return names;
}

std::vector<std::string> step2_groups(const DasnModel& model) {
  std::vector<std::string> names;
  for (const auto& f : model.config().factors) {
    names.push_back("I." + f.name);
    names.push_back("D." + f.name);
  }
  return names;
}

}  // namespace

TrainState init_state(const TrainConfig& config, const FactorDataset& dataset) {
  validate(config);
  if (dataset.size() == 0) throw DataError("training dataset is empty");
  DasnConfig model_config;
  model_config.input_dim = dataset.input_dim;
  model_config.feature_dim = config.feature_dim;
  model_config.hidden_dim = config.hidden_dim;
  for (const auto& k : config.active_factors()) {
    const std::size_t classes = dataset.class_count(k);
    if (classes < 2) {
      throw ConfigError("factor " + k + " has " + std::to_string(classes) + " classes in the training set");
    }
    model_config.factors.push_back(FactorSpec{k, classes});
  }

  TrainState state{DasnModel(model_config, derive_seed(config.seed, "init")), {}, {}, 0, 0, {}};
  state.step1.options.learning_rate = config.learning_rate;
  state.step2.options.learning_rate = config.learning_rate;
  state.history.factors = config.active_factors();
  state.history.secondary = config.uses_secondary() && !state.history.factors.empty();
  return state;
}

void train_iteration(TrainState& state, const TrainConfig& config, const Batch& batch,
                     const StepObserver& observer) {
  const ObjectiveOptions options{config.uses_secondary()};
  DasnModel& model = state.model;
  try {
    ObjectiveTerms first;
    {
      Tape tape;
      ParamBinding binding(&tape);
      first = step1_objective(model, binding, batch, config.weights, options);
      const GradientMap grads = binding.gradients(first.total);
      try {
        adam_step(state.step1, model.groups(step1_groups(model, config)), grads);
      } catch (const NumericError&) {
        throw DivergenceError(0, "step1 update");
      }
    }
    if (observer) observer(1, model);
    if (!model.config().factors.empty()) {
      Tape tape;
      ParamBinding binding(&tape);
      const ObjectiveTerms second = step2_objective(model, binding, batch, config.weights, options);
      const GradientMap grads = binding.gradients(second.total);
      try {
        adam_step(state.step2, model.groups(step2_groups(model)), grads);
      } catch (const NumericError&) {
        throw DivergenceError(0, "step2 update");
      }
      if (observer) observer(2, model);
    }

    auto& h = state.history;
    h.cls.push_back(first.cls);
    for (const auto& k : h.factors) {
      h.sif[k].push_back(first.sif.at(k));
      if (h.secondary) h.scls[k].push_back(first.scls.at(k));
    }
  } catch (const DivergenceError& e) {
    throw DivergenceError(state.iteration, e.term());
  } catch (const NumericError&) {
    throw DivergenceError(state.iteration, "gradient");
  }
  ++state.iteration;
}

void train_epochs(TrainState& state, const TrainConfig& config, const FactorDataset& dataset,
                  const std::function<void(const TrainState&)>& on_epoch) {
  validate(config);
  const auto factors = config.active_factors();
  for (const auto& k : factors) {
    if (!state.model.has_factor(k)) throw ConfigError("model has no head for factor " + k);
    if (dataset.class_count(k) != state.model.discriminator(k).layers.back().out_features()) {
      throw ConfigError("factor " + k + " label space does not match the model");
    }
  }
  if (dataset.input_dim != state.model.config().input_dim) throw ConfigError("dataset input_dim does not match the model");

  std::vector<std::size_t> order(dataset.size());
  while (state.epoch < config.epochs) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(derive_seed(config.seed, "shuffle"), static_cast<std::uint64_t>(state.epoch)));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      train_iteration(state, config, dataset.batch(rows, factors));
    }
    ++state.epoch;
    if (on_epoch) on_epoch(state);
  }
}

TrainResult train(const TrainConfig& config, const FactorDataset& dataset) {
  TrainState state = init_state(config, dataset);
  train_epochs(state, config, dataset);
  return TrainResult{std::move(state.model), std::move(state.history)};
}

// --- state image --------------------------------------------------------------

namespace {

Tensor as_tensor(const std::vector<double>& values) {
  if (values.empty()) return Tensor::zeros({1});
  return Tensor::vector(values);
}

void append_adam(NamedTensors& out, const std::string& prefix, const AdamState& adam) {
  out.emplace_back(prefix + ".step", Tensor::scalar(static_cast<double>(adam.step)));
  out.emplace_back(prefix + ".lr", Tensor::scalar(adam.options.learning_rate));
  for (const auto& [name, m] : adam.first_moment) out.emplace_back(prefix + ".m." + name, Tensor::vector(m));
  for (const auto& [name, v] : adam.second_moment) out.emplace_back(prefix + ".v." + name, Tensor::vector(v));
}

}  // namespace

std::vector<std::uint8_t> encode_train_state(const TrainState& state) {
  NamedTensors out = state.model.parameters();
  append_adam(out, "state.step1", state.step1);
  append_adam(out, "state.step2", state.step2);
  out.emplace_back("state.epoch", Tensor::scalar(static_cast<double>(state.epoch)));
  out.emplace_back("state.iteration", Tensor::scalar(static_cast<double>(state.iteration)));
  out.emplace_back("state.history.secondary", Tensor::scalar(state.history.secondary ? 1.0 : 0.0));
  // Factor order is carried by the order of the entries.
  out.emplace_back("history.L_cls", as_tensor(state.history.cls));
  for (const auto& k : state.history.factors) {
    out.emplace_back("history.L_sif." + k, as_tensor(state.history.sif.count(k) ? state.history.sif.at(k)
                                                                              : std::vector<double>{}));
    if (state.history.secondary) {
      out.emplace_back("history.L_scls." + k, as_tensor(state.history.scls.count(k) ? state.history.scls.at(k)
                                                                                  : std::vector<double>{}));
    }
  }
  return encode_checkpoint(out);
}

TrainState decode_train_state(std::span<const std::uint8_t> image) {
  const NamedTensors entries = decode_checkpoint(image);
  NamedTensors params;
  std::size_t i = 0;
  for (; i < entries.size() && !entries[i].first.starts_with("state.") && !entries[i].first.starts_with("history.");
       ++i) {
    params.push_back(entries[i]);
  }
  TrainState state{DasnModel::from_parameters(params), {}, {}, 0, 0, {}};
  const auto counter = [](const Tensor& t) { return static_cast<std::size_t>(t.item()); };
  std::size_t history_length = 0;
  bool have_length = false;
  for (; i < entries.size(); ++i) {
    const auto& [name, t] = entries[i];
    const auto adam_entry = [&](const std::string& prefix, AdamState& adam) {
      if (!name.starts_with(prefix)) return false;
      const std::string rest = name.substr(prefix.size());
      const std::vector<double> values(t.data().begin(), t.data().end());
      if (rest == ".step") adam.step = counter(t);
      else if (rest == ".lr") adam.options.learning_rate = t.item();
      else if (rest.starts_with(".m.")) adam.first_moment[rest.substr(3)] = values;
      else if (rest.starts_with(".v.")) adam.second_moment[rest.substr(3)] = values;
      else throw FormatError("unknown optimizer entry " + name);
      return true;
    };
    if (adam_entry("state.step1", state.step1) || adam_entry("state.step2", state.step2)) continue;
    if (name == "state.epoch") {
      state.epoch = counter(t);
    } else if (name == "state.iteration") {
      state.iteration = counter(t);
      history_length = state.iteration;
      have_length = true;
    } else if (name == "state.history.secondary") {
      state.history.secondary = t.item() != 0.0;
    } else if (name.starts_with("history.")) {
      if (!have_length) throw FormatError("history entries precede the iteration counter");
      std::vector<double> values(t.data().begin(), t.data().end());
      values.resize(history_length);
      const std::string series = name.substr(8);
      if (series == "L_cls") {
        state.history.cls = std::move(values);
      } else if (series.starts_with("L_sif.")) {
        const std::string k = series.substr(6);
        state.history.factors.push_back(k);
        state.history.sif[k] = std::move(values);
      } else if (series.starts_with("L_scls.")) {
        state.history.scls[series.substr(7)] = std::move(values);
      } else {
        throw FormatError("unknown history entry " + name);
      }
    } else {
      throw FormatError("unknown state entry " + name);
    }
  }
  return state;
}

// --- divergence ------------------------------------------------------------------

TrendSummary trend(std::span<const double> values, const DivergenceOptions& options) {
  if (options.window == 0) throw ContractError("trend window must be positive");
  const auto skip = static_cast<std::size_t>(options.start_fraction * static_cast<double>(values.size()));
  const std::span<const double> tail = values.subspan(std::min(skip, values.size()));
  const std::size_t windows = tail.size() / options.window;
  if (windows < 2) {
    throw ContractError("trend needs at least two windows of " + std::to_string(options.window) + " values");
  }
  std::vector<double> xs(windows), ys(windows);
  for (std::size_t w = 0; w < windows; ++w) {
    double total = 0.0;
    for (std::size_t j = 0; j < options.window; ++j) total += tail[w * options.window + j];
    ys[w] = total / static_cast<double>(options.window);
    // Window centre, in iterations from the start of the full history.
    xs[w] = static_cast<double>(skip + w * options.window) + (static_cast<double>(options.window) - 1.0) / 2.0;
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t w = 0; w < windows; ++w) {
    mean_x += xs[w];
    mean_y += ys[w];
  }
  mean_x /= static_cast<double>(windows);
  mean_y /= static_cast<double>(windows);
  double sxy = 0.0, sxx = 0.0;
  std::size_t increases = 0;
  for (std::size_t w = 0; w < windows; ++w) {
    sxy += (xs[w] - mean_x) * (ys[w] - mean_y);
    sxx += (xs[w] - mean_x) * (xs[w] - mean_x);
    if (w > 0 && ys[w] > ys[w - 1]) ++increases;
  }
  TrendSummary out;
  out.slope = sxy / sxx;
  out.monotonicity = static_cast<double>(increases) / static_cast<double>(windows - 1);
  out.windows = windows;
  return out;
}

std::map<std::string, TrendSummary> divergence_report(const LossHistory& history, const DivergenceOptions& options) {
  std::map<std::string, TrendSummary> out;
  for (const auto& k : history.factors) out[k] = trend(history.sif.at(k), options);
  return out;
}

}  // namespace dasn
