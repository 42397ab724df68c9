#include "dasn/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dasn/error.hpp"
#include "dasn/metrics.hpp"

namespace dasn {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

Json defaults() {
  const FactorModelOptions data;
  const TrainConfig train;
  const ProbeOptions probe;
  Json lambda = Json::object();
  for (const auto& [k, v] : LossWeights::defaults().sif) lambda[k] = v;
  return Json{
      {"version", kConfigSchemaVersion},
      {"seed", std::uint64_t{1}},
      {"task", "OCI_to_M"},
      {"data",
       {{"input_dim", data.input_dim},
        {"samples_per_domain", data.samples_per_domain},
        {"alpha_min", data.alpha_min},
        {"alpha_max", data.alpha_max},
        {"spoof_domain_mix", data.spoof_domain_mix},
        {"identity_scale", data.identity_scale},
        {"environment_scale", data.environment_scale},
        {"sensor_scale", data.sensor_scale},
        {"noise_sigma", data.noise_sigma}}},
      {"train",
       {{"mode", to_string(train.mode)},
        {"factors", train.factors},
        {"lambda", lambda},
        {"lr", train.learning_rate},
        {"batch_size", train.batch_size},
        {"epochs", train.epochs},
        {"feature_dim", train.feature_dim},
        {"hidden_dim", train.hidden_dim},
        {"resume", false}}},
      {"eval", {{"split", "test"}}},
      {"probe",
       {{"split", "train"},
        {"factors", {"identity", "environment", "sensor"}},
        {"epochs", probe.epochs},
        {"batch_size", probe.batch_size},
        {"lr", probe.learning_rate},
        {"test_fraction", probe.test_fraction},
        {"min_per_class", probe.min_per_class},
        {"hidden_dim", probe.hidden_dim}}},
      {"report", {{"runs", Json::array()}}},
      {"paths", {{"data", "data"}, {"run", "run"}, {"baseline", ""}, {"out", "report"}}},
  };
}

const char* kind(const Json& j) {
  if (j.is_boolean()) return "boolean";
  if (j.is_number_unsigned()) return "non-negative integer";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return "null";
}

bool same_kind(const Json& target, const Json& value) {
  if (target.is_number_unsigned()) return value.is_number_unsigned();
  if (target.is_number()) return value.is_number();
  if (target.is_boolean()) return value.is_boolean();
  if (target.is_string()) return value.is_string();
  if (target.is_array()) return value.is_array();
  if (target.is_object()) return value.is_object();
  return false;
}

void assign(Json& target, const Json& value, const std::string& path) {
  if (!same_kind(target, value)) {
    throw ConfigError("config key " + path + " expects a " + kind(target) + ", got " + value.dump());
  }
  if (target.is_object()) {
    for (const auto& [k, v] : value.items()) {
      if (!target.contains(k)) throw ConfigError("unknown config key " + (path.empty() ? k : path + "." + k));
      assign(target[k], v, path.empty() ? k : path + "." + k);
    }
    return;
  }
  if (target.is_number_float() && value.is_number_integer()) {
    target = value.get<double>();
    return;
  }
  target = value;
}

void apply_override(Json& doc, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + text);
  const std::string path = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw ConfigError("unknown config key " + path);
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (path == "version") throw ConfigError("version cannot be overridden");
  Json value;
  if (node->is_string()) {
    value = raw;
  } else {
    try {
      value = Json::parse(raw);
    } catch (const Json::exception&) {
      if (!node->is_array()) throw ConfigError("cannot parse value for " + path + ": " + raw);
      // Bare comma-separated list of strings.
      value = Json::array();
      std::stringstream ss(raw);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) value.push_back(item);
      }
    }
  }
  if (node->is_object()) {
    assign(*node, value, path);
  } else {
    if (!same_kind(*node, value)) {
      throw ConfigError("config key " + path + " expects a " + kind(*node) + ", got " + raw);
    }
    assign(*node, value, path);
  }
}

std::vector<std::string> string_list(const Json& j, const std::string& path) {
  std::vector<std::string> out;
  for (const auto& item : j) {
    if (!item.is_string()) throw ConfigError(path + " must be a list of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

void check_factor_names(const std::vector<std::string>& names, const std::string& path, bool allow_domain) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& k = names[i];
    const bool known = k == "identity" || k == "environment" || k == "sensor" || (allow_domain && k == "domain");
    if (!known) throw ConfigError(path + ": unknown factor " + k);
    if (std::find(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(i), k) !=
        names.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw ConfigError(path + ": factor " + k + " listed twice");
    }
  }
}

RunConfig typed(const Json& j) {
  RunConfig c;
  c.seed = j["seed"].get<std::uint64_t>();
  c.task = j["task"].get<std::string>();
  const auto tasks = benchmark_tasks();
  if (std::find(tasks.begin(), tasks.end(), c.task) == tasks.end()) throw ConfigError("unknown task " + c.task);

  const Json& d = j["data"];
  c.data.seed = c.seed;
  c.data.input_dim = d["input_dim"].get<std::size_t>();
  c.data.samples_per_domain = d["samples_per_domain"].get<std::size_t>();
  c.data.alpha_min = d["alpha_min"].get<double>();
  c.data.alpha_max = d["alpha_max"].get<double>();
  c.data.spoof_domain_mix = d["spoof_domain_mix"].get<double>();
  c.data.identity_scale = d["identity_scale"].get<double>();
  c.data.environment_scale = d["environment_scale"].get<double>();
  c.data.sensor_scale = d["sensor_scale"].get<double>();
  c.data.noise_sigma = d["noise_sigma"].get<double>();
  if (c.data.input_dim == 0) throw ConfigError("data.input_dim must be positive");
  if (c.data.samples_per_domain < 2) throw ConfigError("data.samples_per_domain must be at least 2");
  if (!(c.data.alpha_min <= c.data.alpha_max)) throw ConfigError("data.alpha_min exceeds data.alpha_max");
  if (!(c.data.noise_sigma >= 0.0)) throw ConfigError("data.noise_sigma must be non-negative");

  const Json& t = j["train"];
  c.train.mode = parse_mode(t["mode"].get<std::string>());
  c.train.factors = string_list(t["factors"], "train.factors");
  check_factor_names(c.train.factors, "train.factors", false);
  c.train.weights.sif.clear();
  for (const auto& [k, v] : t["lambda"].items()) c.train.weights.sif[k] = v.get<double>();
  c.train.learning_rate = t["lr"].get<double>();
  c.train.batch_size = t["batch_size"].get<std::size_t>();
  c.train.epochs = t["epochs"].get<std::size_t>();
  c.train.feature_dim = t["feature_dim"].get<std::size_t>();
  c.train.hidden_dim = t["hidden_dim"].get<std::size_t>();
  c.train.seed = c.seed;
  c.resume = t["resume"].get<bool>();
  if (c.train.mode == Mode::baseline) c.train.factors.clear();
  if (c.train.feature_dim == 0 || c.train.hidden_dim == 0) throw ConfigError("train widths must be positive");

  c.eval_split = j["eval"]["split"].get<std::string>();
  if (c.eval_split != "train" && c.eval_split != "test") throw ConfigError("eval.split must be train or test");

  const Json& p = j["probe"];
  c.probe_split = p["split"].get<std::string>();
  if (c.probe_split != "train" && c.probe_split != "test") throw ConfigError("probe.split must be train or test");
  c.probe_factors = string_list(p["factors"], "probe.factors");
  check_factor_names(c.probe_factors, "probe.factors", true);
  c.probe.epochs = p["epochs"].get<std::size_t>();
  c.probe.batch_size = p["batch_size"].get<std::size_t>();
  c.probe.learning_rate = p["lr"].get<double>();
  c.probe.test_fraction = p["test_fraction"].get<double>();
  c.probe.min_per_class = p["min_per_class"].get<std::size_t>();
  c.probe.hidden_dim = p["hidden_dim"].get<std::size_t>();
  if (c.probe.batch_size == 0) throw ConfigError("probe.batch_size must be positive");
  if (!(c.probe.test_fraction > 0.0 && c.probe.test_fraction < 1.0)) {
    throw ConfigError("probe.test_fraction must lie in (0, 1)");
  }

  for (const auto& run : j["report"]["runs"]) {
    if (!run.is_object() || !run.contains("label") || !run.contains("checkpoint") || run.size() != 2 ||
        !run["label"].is_string() || !run["checkpoint"].is_string()) {
      throw ConfigError("report.runs entries must be {\"label\": string, \"checkpoint\": string}");
    }
    c.report_runs.push_back({run["label"].get<std::string>(), run["checkpoint"].get<std::string>()});
  }

  const Json& paths = j["paths"];
  c.data_dir = paths["data"].get<std::string>();
  c.run_dir = paths["run"].get<std::string>();
  c.baseline_checkpoint = paths["baseline"].get<std::string>();
  c.report_dir = paths["out"].get<std::string>();
  c.resolved_json = j.dump(2) + "\n";
  return c;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  const std::string text = read_text(path);
  return {text.begin(), text.end()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("error writing " + path.string());
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  write_text(path, std::string(bytes.begin(), bytes.end()));
}

template <typename Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  write_text(path, ss.str());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ConfigError(what + " not found: " + path.string());
}

const FactorDataset& pick_split(const DomainSplit& split, const std::string& which) {
  return which == "train" ? split.train : split.test;
}

void check_input_dim(const DasnModel& model, const FactorDataset& dataset, const std::string& what) {
  if (model.config().input_dim != dataset.input_dim) {
    throw ConfigError(what + " expects input_dim " + std::to_string(model.config().input_dim) +
                      " but the dataset has " + std::to_string(dataset.input_dim));
  }
}

ScoreSet score(const DasnModel& model, const FactorDataset& dataset) {
  ScoreSet s;
  s.scores = infer(model, dataset.inputs());
  s.labels = dataset.labels("spoof");
  return s;
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::string heads_of(const DasnModel& model) {
  std::string out;
  for (const auto& f : model.config().factors) out += (out.empty() ? "" : "+") + f.name;
  return out.empty() ? "-" : out;
}

}  // namespace

std::string default_config_json() { return defaults().dump(2) + "\n"; }

RunConfig resolve_config(const std::string& config_text, const std::vector<std::string>& overrides) {
  Json doc = defaults();
  if (!config_text.empty()) {
    Json user;
    try {
      user = Json::parse(config_text);
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!user.is_object()) throw ConfigError("config must be a JSON object");
    if (!user.contains("version")) throw ConfigError("config lacks a version field");
    if (user["version"] != kConfigSchemaVersion) {
      throw ConfigError("unsupported config version " + user["version"].dump() + " (expected " +
                        std::to_string(kConfigSchemaVersion) + ")");
    }
    assign(doc, user, "");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  try {
    return typed(doc);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
}

RunConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  std::string text;
  if (path) {
    if (!fs::is_regular_file(*path)) throw ConfigError("config file not found: " + *path);
    text = read_text(*path);
  }
  return resolve_config(text, overrides);
}

BenchmarkSuite load_suite(const RunConfig& config) {
  const fs::path dir(config.data_dir);
  require_file(dir / "suite.csv", "dataset");
  require_file(dir / "manifest.json", "dataset manifest");
  const std::string manifest = read_text(dir / "manifest.json");
  std::ifstream csv(dir / "suite.csv", std::ios::binary);
  if (!csv) throw IoError("cannot read " + (dir / "suite.csv").string());
  BenchmarkSuite suite = read_suite(csv, manifest);
  const FactorModelOptions& have = suite.model.options();
  const FactorModelOptions& want = config.data;
  const bool same = have.seed == want.seed && have.input_dim == want.input_dim &&
                    have.samples_per_domain == want.samples_per_domain && have.alpha_min == want.alpha_min &&
                    have.alpha_max == want.alpha_max && have.spoof_domain_mix == want.spoof_domain_mix &&
                    have.identity_scale == want.identity_scale && have.environment_scale == want.environment_scale &&
                    have.sensor_scale == want.sensor_scale && have.noise_sigma == want.noise_sigma;
  if (!same) throw ConfigError("dataset in " + dir.string() + " was generated with different seed or data options");
  return suite;
}

DasnModel load_model(const std::string& checkpoint_path) {
  require_file(checkpoint_path, "checkpoint");
  const auto bytes = read_bytes(checkpoint_path);
  try {
    return DasnModel::from_parameters(decode_checkpoint(bytes));
  } catch (const FormatError& e) {
    throw ConfigError("bad checkpoint " + checkpoint_path + ": " + e.what());
  }
}

void save_model(const DasnModel& model, const std::string& checkpoint_path) {
  write_bytes(checkpoint_path, encode_checkpoint(model.parameters()));
}

void cmd_gen_data(const RunConfig& config, std::ostream& log) {
  const BenchmarkSuite suite = gen_benchmark_suite(config.data);
  const fs::path dir(config.data_dir);
  ensure_dir(dir);
  write_stream(dir / "suite.csv", [&](std::ostream& o) { write_suite_csv(o, suite); });
  write_text(dir / "manifest.json", suite_manifest_json(suite));
  write_text(dir / "config.gen-data.json", config.resolved_json);
  std::size_t n = 0;
  for (const auto& d : suite.domains) n += d.size();
  log << "wrote " << n << " samples in " << suite.domains.size() << " domains to " << dir.string() << "\n";
}

void cmd_train(const RunConfig& config, std::ostream& log) {
  const BenchmarkSuite suite = load_suite(config);
  const DomainSplit split = split_for_task(suite, config.task);
  const fs::path dir(config.run_dir);
  ensure_dir(dir);
  const fs::path state_path = dir / "train_state.ckpt";

  TrainState state = init_state(config.train, split.train);
  if (config.resume && fs::is_regular_file(state_path)) {
    TrainState restored = [&] {
      try {
        return decode_train_state(read_bytes(state_path));
      } catch (const FormatError& e) {
        throw ConfigError("bad training state " + state_path.string() + ": " + e.what());
      }
    }();
    if (restored.model.group_names() != state.model.group_names() ||
        restored.model.config().feature_dim != state.model.config().feature_dim ||
        restored.model.config().hidden_dim != state.model.config().hidden_dim ||
        restored.history.secondary != state.history.secondary) {
      throw ConfigError("training state in " + state_path.string() + " does not match the configured model");
    }
    restored.step1.options.learning_rate = config.train.learning_rate;
    restored.step2.options.learning_rate = config.train.learning_rate;
    state = std::move(restored);
    log << "resuming " << config.task << " at epoch " << state.epoch << "\n";
  }
  write_text(dir / "config.train.json", config.resolved_json);

  train_epochs(state, config.train, split.train, [&](const TrainState& s) {
    write_bytes(state_path, encode_train_state(s));
  });

  save_model(state.model, (dir / "model.ckpt").string());
  write_bytes(state_path, encode_train_state(state));
  write_stream(dir / "history.csv", [&](std::ostream& o) { write_history_csv(o, state.history); });
  log << "trained " << to_string(config.train.mode) << " on " << config.task << ": " << state.epoch << " epochs, "
      << state.iteration << " iterations";
  if (!state.history.cls.empty()) log << ", final L_cls " << fixed(state.history.cls.back(), 4);
  log << "\n";
}

void cmd_eval(const RunConfig& config, std::ostream& log) {
  const BenchmarkSuite suite = load_suite(config);
  const DomainSplit split = split_for_task(suite, config.task);
  const fs::path dir(config.run_dir);
  const DasnModel model = load_model((dir / "model.ckpt").string());
  const FactorDataset& dataset = pick_split(split, config.eval_split);
  check_input_dim(model, dataset, "checkpoint");
  const ScoreSet scores = score(model, dataset);
  const EvalReport report = evaluate(scores);
  write_stream(dir / "scores.csv", [&](std::ostream& o) { write_scores_csv(o, scores); });
  write_text(dir / "report.json", report_json(report));
  write_stream(dir / "report.csv", [&](std::ostream& o) { write_report_csv(o, report); });
  write_text(dir / "config.eval.json", config.resolved_json);
  log << config.task << " " << config.eval_split << ": AUC " << fixed(100.0 * report.auc, 2) << "%, HTER "
      << fixed(100.0 * report.hter, 2) << "%\n";
}

void cmd_probe(const RunConfig& config, std::ostream& log) {
  if (config.baseline_checkpoint.empty()) throw ConfigError("probe needs paths.baseline");
  const BenchmarkSuite suite = load_suite(config);
  const DomainSplit split = split_for_task(suite, config.task);
  const fs::path dir(config.run_dir);
  const DasnModel baseline = load_model(config.baseline_checkpoint);
  const DasnModel model = load_model((dir / "model.ckpt").string());
  const FactorDataset& dataset = pick_split(split, config.probe_split);
  check_input_dim(baseline, dataset, "baseline checkpoint");
  check_input_dim(model, dataset, "checkpoint");
  const SuppressionReport report =
      suppression_report(baseline, model, dataset, config.probe_factors, config.seed, config.probe);
  write_text(dir / "suppression.json", suppression_json(report));
  write_stream(dir / "suppression.csv", [&](std::ostream& o) { write_suppression_csv(o, report); });
  const Tensor features = extract_features(model, dataset);
  write_stream(dir / "features.csv", [&](std::ostream& o) { write_features_csv(o, features, dataset); });
  write_text(dir / "config.probe.json", config.resolved_json);
  for (const auto& [k, delta] : report.delta) {
    log << k << " probe: baseline " << fixed(report.baseline.factors.at(k).accuracy, 3) << ", model "
        << fixed(report.model.factors.at(k).accuracy, 3) << ", delta " << fixed(delta, 3) << "\n";
  }
}

void cmd_report(const RunConfig& config, std::ostream& log) {
  if (config.report_runs.empty()) throw ConfigError("report.runs is empty");
  const BenchmarkSuite suite = load_suite(config);
  const DomainSplit split = split_for_task(suite, config.task);
  const FactorDataset& probe_set = pick_split(split, config.probe_split);

  struct Row {
    std::string label;
    std::string heads;
    EvalReport eval;
    ProbeReport probe;
  };
  std::vector<DasnModel> models;
  for (const auto& run : config.report_runs) models.push_back(load_model(run.checkpoint));
  std::vector<Row> rows;
  for (std::size_t i = 0; i < models.size(); ++i) {
    check_input_dim(models[i], split.test, config.report_runs[i].checkpoint);
    Row row;
    row.label = config.report_runs[i].label;
    row.heads = heads_of(models[i]);
    row.eval = evaluate(score(models[i], split.test));
    row.probe = probe_model(models[i], probe_set, config.probe_factors, config.seed, config.probe);
    rows.push_back(std::move(row));
  }

  std::string md = "| run | heads | AUC (%) | HTER (%)";
  std::string rule = "|---|---|---:|---:";
  std::string csv = "run,heads,auc,hter";
  for (const auto& k : config.probe_factors) {
    md += " | " + k + " probe";
    rule += "|---:";
    csv += ",probe_" + k;
  }
  md += " | spoof probe |\n";
  rule += "|---:|\n";
  csv += ",probe_spoof\n";
  md += rule;
  for (const auto& r : rows) {
    md += "| " + r.label + " | " + r.heads + " | " + fixed(100.0 * r.eval.auc, 2) + " | " +
          fixed(100.0 * r.eval.hter, 2);
    csv += r.label + "," + r.heads + "," + format_double(r.eval.auc) + "," + format_double(r.eval.hter);
    for (const auto& k : config.probe_factors) {
      md += " | " + fixed(r.probe.factors.at(k).accuracy, 3);
      csv += "," + format_double(r.probe.factors.at(k).accuracy);
    }
    md += " | " + fixed(r.probe.spoof.accuracy, 3) + " |\n";
    csv += "," + format_double(r.probe.spoof.accuracy) + "\n";
  }

  const fs::path dir(config.report_dir);
  ensure_dir(dir);
  write_text(dir / "ablation.md", md);
  write_text(dir / "ablation.csv", csv);
  write_text(dir / "config.report.json", config.resolved_json);
  log << md;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DASN laboratory: synthetic data, training, evaluation and probing", "dasn-lab"};

  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print the default configuration and exit");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "Generate the four-domain synthetic suite"},
      {"train", "Train a model on the configured task"},
      {"eval", "Score a split with a trained checkpoint"},
      {"probe", "Linear-probe a checkpoint against a baseline"},
      {"report", "Build the ablation table from several checkpoints"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option_function<std::string>("--config", [&](const std::string& p) { config_path = p; },
                                          "JSON config file");
    sub->add_option("--set", overrides, "Override a config leaf, e.g. train.lr=1e-4")->allow_extra_args(false);
  }
  // --print-defaults works without a subcommand.
  app.require_subcommand(0, 1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (print_defaults) {
    out << default_config_json();
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    err << "dasn-lab: a subcommand is required (gen-data, train, eval, probe, report)\n";
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const RunConfig config = load_config(config_path, overrides);
    if (command == "gen-data") cmd_gen_data(config, out);
    else if (command == "train") cmd_train(config, out);
    else if (command == "eval") cmd_eval(config, out);
    else if (command == "probe") cmd_probe(config, out);
    else cmd_report(config, out);
    return kExitOk;
  } catch (const DivergenceError& e) {
    err << "dasn-lab " << command << ": " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IoError& e) {
    err << "dasn-lab " << command << ": " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "dasn-lab " << command << ": " << e.what() << "\n";
    return kExitConfig;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace dasn
