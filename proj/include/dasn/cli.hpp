#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dasn/probe.hpp"
#include "dasn/synthdata.hpp"
#include "dasn/trainer.hpp"

namespace dasn {

inline constexpr int kConfigSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitIo = 2, kExitDivergence = 3 };

struct ReportRun {
  std::string label;
  std::string checkpoint;
};

// Fully resolved run configuration. One `seed` drives data generation,
// initialization, shuffling and probe splits.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string task = "OCI_to_M";
  FactorModelOptions data;
  TrainConfig train;
  bool resume = false;
  std::string eval_split = "test";
  ProbeOptions probe;
  std::string probe_split = "train";
  std::vector<std::string> probe_factors = {"identity", "environment", "sensor"};
  std::vector<ReportRun> report_runs;

  std::string data_dir = "data";
  std::string run_dir = "run";
  std::string baseline_checkpoint;
  std::string report_dir = "report";

  // The merged JSON document, written next to every command's outputs.
  std::string resolved_json;
};

// Default configuration document (pretty-printed JSON).
std::string default_config_json();

// Merges `config_text` (may be empty) and then every `key=value` override
// into the defaults. Unknown keys, type mismatches and a wrong or missing
// version are ConfigErrors.
RunConfig resolve_config(const std::string& config_text, const std::vector<std::string>& overrides);
RunConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides);

// Commands. Progress lines go to `log`.
void cmd_gen_data(const RunConfig& config, std::ostream& log);
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_eval(const RunConfig& config, std::ostream& log);
void cmd_probe(const RunConfig& config, std::ostream& log);
void cmd_report(const RunConfig& config, std::ostream& log);

// Suite written by gen-data under the configured data directory. The
// manifest must agree with the configured generator options.
BenchmarkSuite load_suite(const RunConfig& config);
DasnModel load_model(const std::string& checkpoint_path);
void save_model(const DasnModel& model, const std::string& checkpoint_path);

// dasn-lab gen-data|train|eval|probe|report --config <path> [--set k=v]...
// `args` excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace dasn
