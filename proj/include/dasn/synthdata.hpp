#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dasn/autodiff.hpp"
#include "dasn/losses.hpp"

namespace dasn {

// Class counts of the three spoof-irrelevant factors in one domain.
struct DomainSpec {
  std::string name;
  std::size_t identities;
  std::size_t environments;
  std::size_t sensors;
};

// The four training-set rosters (M, C, I, O) with their identity,
// environment and sensor counts.
std::vector<DomainSpec> benchmark_domains();

struct FactorModelOptions {
  std::uint64_t seed = 1;
  std::size_t input_dim = 24;
  std::size_t samples_per_domain = 1440;
  // Per-domain spoof magnitude alpha is drawn uniformly from this range.
  double alpha_min = 1.0;
  double alpha_max = 1.8;
  // Weight of the domain-specific part of each domain's spoof direction.
  double spoof_domain_mix = 0.5;
  double identity_scale = 2.5;
  double environment_scale = 2.5;
  double sensor_scale = 2.5;
  double noise_sigma = 0.3;
};

// Per-domain dictionaries of unit vectors from which samples are composed:
//   x = alpha_d * y * spoof_d + s_id * template[f_id] + s_env * offset[f_env]
//       + s_sens * signature[f_sens] + sigma * noise
// Nuisance dictionaries are drawn orthogonal to the spoof direction shared by
// all domains.
class FactorModel {
 public:
  FactorModel(FactorModelOptions options, std::vector<DomainSpec> domains);

  const FactorModelOptions& options() const { return options_; }
  const std::vector<DomainSpec>& domains() const { return domains_; }
  std::size_t domain_index(const std::string& name) const;

  double alpha(std::size_t domain) const { return alpha_[domain]; }
  const std::vector<double>& spoof_direction(std::size_t domain) const { return spoof_[domain]; }
  const std::vector<double>& identity_template(std::size_t domain, std::size_t i) const;
  const std::vector<double>& environment_offset(std::size_t domain, std::size_t i) const;
  const std::vector<double>& sensor_signature(std::size_t domain, std::size_t i) const;

  // Replaces every dictionary vector with zeros. Test hook for the
  // construction identities.
  void zero_dictionaries();

 private:
  struct Dictionaries {
    std::vector<std::vector<double>> identity;
    std::vector<std::vector<double>> environment;
    std::vector<std::vector<double>> sensor;
  };

  FactorModelOptions options_;
  std::vector<DomainSpec> domains_;
  std::vector<double> alpha_;
  std::vector<std::vector<double>> spoof_;
  std::vector<Dictionaries> dict_;
};

struct Sample {
  std::vector<double> x;
  Label y = 0;
  Label identity = 0;
  Label environment = 0;
  Label sensor = 0;
  std::size_t domain = 0;  // index into the owning dataset's roster
};

// Labels of `sample` for a named factor: identity, environment, sensor or
// domain.
Label factor_label(const Sample& sample, const std::string& factor);

Sample gen_sample(const FactorModel& model, std::size_t domain, Label y, Label identity, Label environment,
                  Label sensor, std::uint64_t sample_seed);

struct FactorDataset {
  std::size_t input_dim = 0;
  std::vector<std::string> domains;
  std::vector<Sample> samples;
  std::size_t identities = 0;
  std::size_t environments = 0;
  std::size_t sensors = 0;

  std::size_t size() const { return samples.size(); }
  std::size_t class_count(const std::string& factor) const;
  Tensor inputs() const;
  Tensor inputs(std::span<const std::size_t> rows) const;
  std::vector<Label> labels(const std::string& factor) const;  // "spoof" gives y
  Batch batch(std::span<const std::size_t> rows, const std::vector<std::string>& factors) const;
};

// One dataset per domain, labels local to the domain.
struct BenchmarkSuite {
  FactorModel model;
  std::vector<FactorDataset> domains;
};

BenchmarkSuite gen_benchmark_suite(const FactorModelOptions& options);

// Concatenates datasets, offsetting each factor's labels so that classes of
// different domains never collide. The result's label spaces are 0..N^k-1.
FactorDataset union_of(std::span<const FactorDataset> parts);

struct DomainSplit {
  FactorDataset train;
  FactorDataset test;
};

DomainSplit leave_one_domain_out(const BenchmarkSuite& suite, const std::string& held_out);
// "OCI_to_M" and friends.
DomainSplit split_for_task(const BenchmarkSuite& suite, const std::string& task);
std::vector<std::string> benchmark_tasks();

// --- files ------------------------------------------------------------------

// Shortest decimal that round-trips the double exactly.
std::string format_double(double value);
double parse_double(std::string_view text);

// Suite CSV: a header line "input_dim,N_id,N_env,N_sens,domains" carrying the
// values, then one row "domain,y,f_id,f_env,f_sens,x_0..x_{D-1}" per sample.
// Labels are the offset-union labels; domain is the roster index.
void write_suite_csv(std::ostream& out, const BenchmarkSuite& suite);
// Manifest: seed, coefficients and per-domain roster (names, class counts,
// offsets, alpha).
std::string suite_manifest_json(const BenchmarkSuite& suite);
// Rebuilds a suite from the CSV and its manifest. Dictionaries are
// regenerated from the manifest's options and the samples are read verbatim.
BenchmarkSuite read_suite(std::istream& csv, const std::string& manifest_json);

}  // namespace dasn
