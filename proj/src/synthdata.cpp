#include "dasn/synthdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "dasn/error.hpp"
#include "dasn/random.hpp"

namespace dasn {

namespace {

std::vector<double> unit_vector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& c : v) {
      c = rng.gaussian();
      norm += c * c;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& c : v) c /= norm;
  return v;
}

// Unit vectors with the component along `away` removed. With dim 1 there is
// no complement and the raw draw is kept.
std::vector<std::vector<double>> unit_vectors(Rng& rng, std::size_t count, std::size_t dim,
                                              const std::vector<double>& away) {
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> v;
    double norm = 0.0;
    do {
      v = unit_vector(rng, dim);
      if (dim == 1) break;
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dot += v[j] * away[j];
      norm = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        v[j] -= dot * away[j];
        norm += v[j] * v[j];
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-6);
    if (dim > 1)
      for (auto& c : v) c /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

void check_label(const char* what, Label value, std::size_t count) {
  if (value < 0 || static_cast<std::size_t>(value) >= count) {
    throw RangeError(std::string(what) + " index " + std::to_string(value) + " outside 0.." +
                     std::to_string(count == 0 ? 0 : count - 1));
  }
}

}  // namespace

std::vector<DomainSpec> benchmark_domains() {
  return {
      {"M", 15, 1, 2},
      {"C", 20, 1, 3},
      {"I", 15, 2, 1},
      {"O", 20, 3, 6},
  };
}

// --- FactorModel ------------------------------------------------------------

FactorModel::FactorModel(FactorModelOptions options, std::vector<DomainSpec> domains)
    : options_(options), domains_(std::move(domains)) {
  if (options_.input_dim == 0) throw ConfigError("input_dim must be positive");
  if (!(options_.alpha_min <= options_.alpha_max)) throw ConfigError("alpha_min exceeds alpha_max");
  const std::size_t dim = options_.input_dim;
  Rng shared_rng(derive_seed(options_.seed, "spoof"));
  const std::vector<double> shared = unit_vector(shared_rng, dim);

  for (const auto& spec : domains_) {
    if (spec.identities == 0 || spec.environments == 0 || spec.sensors == 0) {
      throw ConfigError("domain " + spec.name + " needs at least one class per factor");
    }
    Rng alpha_rng(derive_seed(options_.seed, "alpha/" + spec.name));
    alpha_.push_back(alpha_rng.uniform(options_.alpha_min, options_.alpha_max));

    Rng spoof_rng(derive_seed(options_.seed, "spoof/" + spec.name));
    const std::vector<double> own = unit_vector(spoof_rng, dim);
    std::vector<double> dir(dim);
    double norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      dir[i] = shared[i] + options_.spoof_domain_mix * own[i];
      norm += dir[i] * dir[i];
    }
    norm = std::sqrt(norm);
    for (auto& c : dir) c /= norm;
    spoof_.push_back(std::move(dir));

    Rng dict_rng(derive_seed(options_.seed, "dict/" + spec.name));
    Dictionaries d;
    d.identity = unit_vectors(dict_rng, spec.identities, dim, shared);
    d.environment = unit_vectors(dict_rng, spec.environments, dim, shared);
    d.sensor = unit_vectors(dict_rng, spec.sensors, dim, shared);
    dict_.push_back(std::move(d));
  }
}

std::size_t FactorModel::domain_index(const std::string& name) const {
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    if (domains_[i].name == name) return i;
  }
  throw ConfigError("unknown domain " + name);
}

const std::vector<double>& FactorModel::identity_template(std::size_t domain, std::size_t i) const {
  return dict_.at(domain).identity.at(i);
}

const std::vector<double>& FactorModel::environment_offset(std::size_t domain, std::size_t i) const {
  return dict_.at(domain).environment.at(i);
}

const std::vector<double>& FactorModel::sensor_signature(std::size_t domain, std::size_t i) const {
  return dict_.at(domain).sensor.at(i);
}

void FactorModel::zero_dictionaries() {
  const auto clear = [](std::vector<std::vector<double>>& vs) {
    for (auto& v : vs) std::fill(v.begin(), v.end(), 0.0);
  };
  clear(spoof_);
  for (auto& d : dict_) {
    clear(d.identity);
    clear(d.environment);
    clear(d.sensor);
  }
}

// --- samples ------------------------------------------------------------------

Label factor_label(const Sample& sample, const std::string& factor) {
  if (factor == "identity") return sample.identity;
  if (factor == "environment") return sample.environment;
  if (factor == "sensor") return sample.sensor;
  if (factor == "domain") return static_cast<Label>(sample.domain);
  if (factor == "spoof") return sample.y;
  throw ConfigError("unknown factor " + factor);
}

Sample gen_sample(const FactorModel& model, std::size_t domain, Label y, Label identity, Label environment,
                  Label sensor, std::uint64_t sample_seed) {
  if (domain >= model.domains().size()) throw RangeError("domain index " + std::to_string(domain) + " out of range");
  const DomainSpec& spec = model.domains()[domain];
  if (y != 0 && y != 1) throw RangeError("spoof label must be 0 or 1");
  check_label("identity", identity, spec.identities);
  check_label("environment", environment, spec.environments);
  check_label("sensor", sensor, spec.sensors);

  const auto& opt = model.options();
  const auto& spoof = model.spoof_direction(domain);
  const auto& tmpl = model.identity_template(domain, static_cast<std::size_t>(identity));
  const auto& env = model.environment_offset(domain, static_cast<std::size_t>(environment));
  const auto& sens = model.sensor_signature(domain, static_cast<std::size_t>(sensor));
  const double spoof_weight = model.alpha(domain) * static_cast<double>(y);

  Rng noise(derive_seed(derive_seed(opt.seed, static_cast<std::uint64_t>(domain)), sample_seed));
  Sample s;
  s.x.resize(opt.input_dim);
  for (std::size_t i = 0; i < opt.input_dim; ++i) {
    s.x[i] = spoof_weight * spoof[i] + opt.identity_scale * tmpl[i] + opt.environment_scale * env[i] +
             opt.sensor_scale * sens[i] + opt.noise_sigma * noise.gaussian();
  }
  s.y = y;
  s.identity = identity;
  s.environment = environment;
  s.sensor = sensor;
  s.domain = domain;
  return s;
}

// --- datasets -----------------------------------------------------------------

std::size_t FactorDataset::class_count(const std::string& factor) const {
  if (factor == "identity") return identities;
  if (factor == "environment") return environments;
  if (factor == "sensor") return sensors;
  if (factor == "domain") return domains.size();
  if (factor == "spoof") return 2;
  throw ConfigError("unknown factor " + factor);
}

Tensor FactorDataset::inputs() const {
  std::vector<std::size_t> rows(samples.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return inputs(rows);
}

Tensor FactorDataset::inputs(std::span<const std::size_t> rows) const {
  if (rows.empty()) throw DataError("empty row selection");
  std::vector<double> data;
  data.reserve(rows.size() * input_dim);
  for (const auto r : rows) {
    const auto& x = samples.at(r).x;
    data.insert(data.end(), x.begin(), x.end());
  }
  return Tensor::matrix(rows.size(), input_dim, std::move(data));
}

std::vector<Label> FactorDataset::labels(const std::string& factor) const {
  std::vector<Label> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(factor_label(s, factor));
  return out;
}

Batch FactorDataset::batch(std::span<const std::size_t> rows, const std::vector<std::string>& factors) const {
  Batch b;
  b.x = inputs(rows);
  b.y.reserve(rows.size());
  for (const auto r : rows) b.y.push_back(samples[r].y);
  for (const auto& k : factors) {
    auto& labels = b.factor_labels[k];
    labels.reserve(rows.size());
    for (const auto r : rows) labels.push_back(factor_label(samples[r], k));
  }
  return b;
}

BenchmarkSuite gen_benchmark_suite(const FactorModelOptions& options) {
  BenchmarkSuite suite{FactorModel(options, benchmark_domains()), {}};
  const std::size_t n = options.samples_per_domain;
  if (n < 2) throw ConfigError("samples_per_domain must be at least 2");
  for (std::size_t d = 0; d < suite.model.domains().size(); ++d) {
    const DomainSpec& spec = suite.model.domains()[d];
    // Environment and sensor labels come from shuffled, balanced decks so
    // every class appears and none is tied to an identity.
    Rng cells(derive_seed(options.seed, "cells/" + spec.name));
    const auto deck = [&](std::size_t classes) {
      std::vector<Label> labels(n);
      for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<Label>(i % classes);
      cells.shuffle(labels);
      return labels;
    };
    const auto env_deck = deck(spec.environments);
    const auto sens_deck = deck(spec.sensors);

    FactorDataset ds;
    ds.input_dim = options.input_dim;
    ds.domains = {spec.name};
    ds.identities = spec.identities;
    ds.environments = spec.environments;
    ds.sensors = spec.sensors;
    ds.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Label y = static_cast<Label>(i % 2);
      const Label id = static_cast<Label>((i / 2) % spec.identities);
      Sample s = gen_sample(suite.model, d, y, id, env_deck[i], sens_deck[i], i);
      s.domain = 0;
      ds.samples.push_back(std::move(s));
    }
    suite.domains.push_back(std::move(ds));
  }
  return suite;
}

FactorDataset union_of(std::span<const FactorDataset> parts) {
  if (parts.empty()) throw DataError("union of zero datasets");
  FactorDataset out;
  out.input_dim = parts.front().input_dim;
  for (const auto& part : parts) {
    if (part.input_dim != out.input_dim) throw DimensionError("datasets disagree on input_dim");
    const auto id_offset = static_cast<Label>(out.identities);
    const auto env_offset = static_cast<Label>(out.environments);
    const auto sens_offset = static_cast<Label>(out.sensors);
    const std::size_t domain_offset = out.domains.size();
    for (Sample s : part.samples) {
      s.identity += id_offset;
      s.environment += env_offset;
      s.sensor += sens_offset;
      s.domain += domain_offset;
      out.samples.push_back(std::move(s));
    }
    out.identities += part.identities;
    out.environments += part.environments;
    out.sensors += part.sensors;
    out.domains.insert(out.domains.end(), part.domains.begin(), part.domains.end());
  }
  return out;
}

DomainSplit leave_one_domain_out(const BenchmarkSuite& suite, const std::string& held_out) {
  std::vector<FactorDataset> train_parts;
  const FactorDataset* test = nullptr;
  for (const auto& ds : suite.domains) {
    if (ds.domains.front() == held_out) {
      test = &ds;
    } else {
      train_parts.push_back(ds);
    }
  }
  if (!test) throw ConfigError("held-out domain " + held_out + " is not in the suite");
  if (train_parts.empty()) throw ConfigError("no training domains left after holding out " + held_out);
  return DomainSplit{union_of(train_parts), *test};
}

std::vector<std::string> benchmark_tasks() { return {"OCI_to_M", "OMI_to_C", "OCM_to_I", "ICM_to_O"}; }

DomainSplit split_for_task(const BenchmarkSuite& suite, const std::string& task) {
  const auto sep = task.find("_to_");
  if (sep == std::string::npos || sep + 4 >= task.size()) {
    throw ConfigError("task must look like OCI_to_M, got " + task);
  }
  const std::string sources = task.substr(0, sep);
  const std::string target = task.substr(sep + 4);
  std::vector<FactorDataset> train_parts;
  for (const char c : sources) {
    const std::string name(1, c);
    if (name == target) throw ConfigError("task " + task + " trains on its held-out domain");
    train_parts.push_back(suite.domains.at(suite.model.domain_index(name)));
  }
  const FactorDataset& test = suite.domains.at(suite.model.domain_index(target));
  return DomainSplit{union_of(train_parts), test};
}

// --- files ------------------------------------------------------------------

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw FormatError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

namespace {

long parse_integer(std::string_view text) {
  long value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw FormatError("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

struct RosterEntry {
  DomainSpec spec;
  Label identity_offset, environment_offset, sensor_offset;
};

std::vector<RosterEntry> roster_of(const BenchmarkSuite& suite) {
  std::vector<RosterEntry> out;
  Label id = 0, env = 0, sens = 0;
  for (const auto& spec : suite.model.domains()) {
    out.push_back({spec, id, env, sens});
    id += static_cast<Label>(spec.identities);
    env += static_cast<Label>(spec.environments);
    sens += static_cast<Label>(spec.sensors);
  }
  return out;
}

}  // namespace

void write_suite_csv(std::ostream& out, const BenchmarkSuite& suite) {
  std::size_t ids = 0, envs = 0, sens = 0;
  for (const auto& spec : suite.model.domains()) {
    ids += spec.identities;
    envs += spec.environments;
    sens += spec.sensors;
  }
  out << suite.model.options().input_dim << ',' << ids << ',' << envs << ',' << sens << ','
      << suite.domains.size() << '\n';
  const auto roster = roster_of(suite);
  for (std::size_t d = 0; d < suite.domains.size(); ++d) {
    for (const auto& s : suite.domains[d].samples) {
      out << d << ',' << s.y << ',' << s.identity + roster[d].identity_offset << ','
          << s.environment + roster[d].environment_offset << ',' << s.sensor + roster[d].sensor_offset;
      for (const double v : s.x) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

std::string suite_manifest_json(const BenchmarkSuite& suite) {
  const auto& opt = suite.model.options();
  nlohmann::ordered_json j;
  j["format"] = "dasn-suite";
  j["version"] = 1;
  j["seed"] = opt.seed;
  j["input_dim"] = opt.input_dim;
  j["samples_per_domain"] = opt.samples_per_domain;
  j["coefficients"] = {
      {"alpha_min", opt.alpha_min},
      {"alpha_max", opt.alpha_max},
      {"spoof_domain_mix", opt.spoof_domain_mix},
      {"identity_scale", opt.identity_scale},
      {"environment_scale", opt.environment_scale},
      {"sensor_scale", opt.sensor_scale},
      {"noise_sigma", opt.noise_sigma},
  };
  nlohmann::ordered_json domains = nlohmann::ordered_json::array();
  const auto roster = roster_of(suite);
  for (std::size_t d = 0; d < roster.size(); ++d) {
    const auto& r = roster[d];
    domains.push_back({
        {"name", r.spec.name},
        {"identities", r.spec.identities},
        {"environments", r.spec.environments},
        {"sensors", r.spec.sensors},
        {"identity_offset", r.identity_offset},
        {"environment_offset", r.environment_offset},
        {"sensor_offset", r.sensor_offset},
        {"alpha", suite.model.alpha(d)},
        {"samples", suite.domains[d].size()},
    });
  }
  j["domains"] = std::move(domains);
  return j.dump(2) + "\n";
}

BenchmarkSuite read_suite(std::istream& csv, const std::string& manifest_json) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(manifest_json);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  FactorModelOptions opt;
  std::vector<DomainSpec> specs;
  try {
    if (m.at("format") != "dasn-suite" || m.at("version") != 1) throw FormatError("unsupported suite manifest");
    opt.seed = m.at("seed").get<std::uint64_t>();
    opt.input_dim = m.at("input_dim").get<std::size_t>();
    opt.samples_per_domain = m.at("samples_per_domain").get<std::size_t>();
    const auto& c = m.at("coefficients");
    opt.alpha_min = c.at("alpha_min").get<double>();
    opt.alpha_max = c.at("alpha_max").get<double>();
    opt.spoof_domain_mix = c.at("spoof_domain_mix").get<double>();
    opt.identity_scale = c.at("identity_scale").get<double>();
    opt.environment_scale = c.at("environment_scale").get<double>();
    opt.sensor_scale = c.at("sensor_scale").get<double>();
    opt.noise_sigma = c.at("noise_sigma").get<double>();
    for (const auto& d : m.at("domains")) {
      specs.push_back({d.at("name").get<std::string>(), d.at("identities").get<std::size_t>(),
                       d.at("environments").get<std::size_t>(), d.at("sensors").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }

  BenchmarkSuite suite{FactorModel(opt, specs), {}};
  const auto roster = roster_of(suite);
  for (const auto& spec : specs) {
    FactorDataset ds;
    ds.input_dim = opt.input_dim;
    ds.domains = {spec.name};
    ds.identities = spec.identities;
    ds.environments = spec.environments;
    ds.sensors = spec.sensors;
    suite.domains.push_back(std::move(ds));
  }

  std::string line;
  if (!std::getline(csv, line)) throw FormatError("suite CSV is empty");
  {
    const auto head = split_commas(line);
    if (head.size() != 5) throw FormatError("suite CSV header must have 5 fields");
    std::size_t ids = 0, envs = 0, sens = 0;
    for (const auto& spec : specs) {
      ids += spec.identities;
      envs += spec.environments;
      sens += spec.sensors;
    }
    if (static_cast<std::size_t>(parse_integer(head[0])) != opt.input_dim ||
        static_cast<std::size_t>(parse_integer(head[1])) != ids ||
        static_cast<std::size_t>(parse_integer(head[2])) != envs ||
        static_cast<std::size_t>(parse_integer(head[3])) != sens ||
        static_cast<std::size_t>(parse_integer(head[4])) != specs.size()) {
      throw FormatError("suite CSV header disagrees with manifest");
    }
  }
  std::size_t line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != 5 + opt.input_dim) {
      throw FormatError("suite CSV line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                        " fields");
    }
    const auto d = static_cast<std::size_t>(parse_integer(fields[0]));
    if (d >= specs.size()) throw FormatError("suite CSV line " + std::to_string(line_no) + ": bad domain");
    Sample s;
    s.y = static_cast<Label>(parse_integer(fields[1]));
    s.identity = static_cast<Label>(parse_integer(fields[2])) - roster[d].identity_offset;
    s.environment = static_cast<Label>(parse_integer(fields[3])) - roster[d].environment_offset;
    s.sensor = static_cast<Label>(parse_integer(fields[4])) - roster[d].sensor_offset;
    try {
      check_label("identity", s.identity, specs[d].identities);
      check_label("environment", s.environment, specs[d].environments);
      check_label("sensor", s.sensor, specs[d].sensors);
    } catch (const RangeError& e) {
      throw FormatError("suite CSV line " + std::to_string(line_no) + ": " + e.what());
    }
    if (s.y != 0 && s.y != 1) throw FormatError("suite CSV line " + std::to_string(line_no) + ": bad spoof label");
    s.x.reserve(opt.input_dim);
    for (std::size_t i = 0; i < opt.input_dim; ++i) s.x.push_back(parse_double(fields[5 + i]));
    suite.domains[d].samples.push_back(std::move(s));
  }
  return suite;
}

}  // namespace dasn
