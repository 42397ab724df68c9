#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "dasn/error.hpp"
#include "dasn/probe.hpp"
#include "dasn/synthdata.hpp"
#include "json.hpp"

using namespace dasn;

namespace {

FactorModelOptions small_options() {
  FactorModelOptions o;
  o.samples_per_domain = 120;
  o.input_dim = 12;
  return o;
}

const BenchmarkSuite& reference_suite() {
  static const BenchmarkSuite suite = gen_benchmark_suite(FactorModelOptions{});
  return suite;
}

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

}  // namespace

TEST(GenSample, ZeroDictionariesAndNoNoiseGiveZero) {
  auto o = small_options();
  o.noise_sigma = 0.0;
  FactorModel m(o, benchmark_domains());
  m.zero_dictionaries();
  for (Label y : {0, 1}) {
    const Sample s = gen_sample(m, 1, y, 3, 0, 2, 17);
    for (double v : s.x) EXPECT_EQ(v, 0.0);
  }
}

TEST(GenSample, SpoofLabelShiftsAlongDirection) {
  const FactorModel m(small_options(), benchmark_domains());
  for (std::size_t d = 0; d < 4; ++d) {
    const Sample a = gen_sample(m, d, 0, 0, 0, 0, 5);
    const Sample b = gen_sample(m, d, 1, 0, 0, 0, 5);
    for (std::size_t i = 0; i < a.x.size(); ++i)
      EXPECT_NEAR(b.x[i] - a.x[i], m.alpha(d) * m.spoof_direction(d)[i], 1e-12);
  }
}

TEST(GenSample, GoldenVector) {
  const FactorModel m(FactorModelOptions{}, benchmark_domains());
  const Sample s = gen_sample(m, 2, 1, 4, 1, 0, 9);
  ASSERT_EQ(s.x.size(), 24u);
  EXPECT_EQ(s.x[0], 0x1.9ea3e9c4854f7p-3) << std::hexfloat << s.x[0];
  EXPECT_EQ(s.x[23], 0x1.f9bcee7fbfccfp-2) << std::hexfloat << s.x[23];
}

TEST(GenSample, OutOfRangeLabels) {
  const FactorModel m(small_options(), benchmark_domains());
  EXPECT_THROW(gen_sample(m, 0, 1, 15, 0, 0, 0), RangeError);
  EXPECT_THROW(gen_sample(m, 0, 1, 0, 1, 0, 0), RangeError);
  EXPECT_THROW(gen_sample(m, 0, 1, 0, 0, 2, 0), RangeError);
  EXPECT_THROW(gen_sample(m, 0, 2, 0, 0, 0, 0), RangeError);
  EXPECT_THROW(gen_sample(m, 4, 1, 0, 0, 0, 0), RangeError);
}

TEST(FactorModel, DictionariesAreUnitNormAndAlphaInRange) {
  const FactorModel m(FactorModelOptions{}, benchmark_domains());
  for (std::size_t d = 0; d < m.domains().size(); ++d) {
    const auto& spec = m.domains()[d];
    EXPECT_GE(m.alpha(d), 1.0);
    EXPECT_LE(m.alpha(d), 1.8);
    EXPECT_NEAR(norm(m.spoof_direction(d)), 1.0, 1e-12);
    for (std::size_t i = 0; i < spec.identities; ++i) EXPECT_NEAR(norm(m.identity_template(d, i)), 1.0, 1e-12);
    for (std::size_t i = 0; i < spec.environments; ++i) EXPECT_NEAR(norm(m.environment_offset(d, i)), 1.0, 1e-12);
    for (std::size_t i = 0; i < spec.sensors; ++i) EXPECT_NEAR(norm(m.sensor_signature(d, i)), 1.0, 1e-12);
  }
  EXPECT_THROW(m.domain_index("X"), ConfigError);
  EXPECT_EQ(m.domain_index("I"), 2u);
}

TEST(FactorModel, NuisanceIsOrthogonalToSharedSpoofDirection) {
  auto o = FactorModelOptions{};
  o.spoof_domain_mix = 0.0;
  const FactorModel m(o, benchmark_domains());
  const auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  for (std::size_t d = 0; d < 4; ++d) {
    EXPECT_NEAR(dot(m.spoof_direction(d), m.spoof_direction(0)), 1.0, 1e-12);
    for (std::size_t i = 0; i < m.domains()[d].identities; ++i)
      EXPECT_NEAR(dot(m.identity_template(d, i), m.spoof_direction(d)), 0.0, 1e-12);
    for (std::size_t i = 0; i < m.domains()[d].sensors; ++i)
      EXPECT_NEAR(dot(m.sensor_signature(d, i), m.spoof_direction(d)), 0.0, 1e-12);
  }
}

TEST(BenchmarkSuite, RosterCounts) {
  const auto& suite = reference_suite();
  ASSERT_EQ(suite.domains.size(), 4u);
  const std::size_t expected[4][3] = {{15, 1, 2}, {20, 1, 3}, {15, 2, 1}, {20, 3, 6}};
  for (std::size_t d = 0; d < 4; ++d) {
    const auto& ds = suite.domains[d];
    EXPECT_EQ(ds.identities, expected[d][0]);
    EXPECT_EQ(ds.environments, expected[d][1]);
    EXPECT_EQ(ds.sensors, expected[d][2]);
    std::set<Label> id, env, sens;
    std::size_t genuine = 0;
    for (const auto& s : ds.samples) {
      id.insert(s.identity);
      env.insert(s.environment);
      sens.insert(s.sensor);
      genuine += s.y == 1;
    }
    EXPECT_EQ(id.size(), expected[d][0]);
    EXPECT_EQ(env.size(), expected[d][1]);
    EXPECT_EQ(sens.size(), expected[d][2]);
    EXPECT_EQ(2 * genuine, ds.size());
  }
}

TEST(BenchmarkSuite, FourTasksWithDisjointSplits) {
  const auto& suite = reference_suite();
  EXPECT_EQ(benchmark_tasks(), (std::vector<std::string>{"OCI_to_M", "OMI_to_C", "OCM_to_I", "ICM_to_O"}));
  const auto split = split_for_task(suite, "OCI_to_M");
  EXPECT_EQ(split.train.identities, 55u);
  EXPECT_EQ(split.train.environments, 6u);
  EXPECT_EQ(split.train.sensors, 10u);
  EXPECT_EQ(split.train.domains.size(), 3u);
  EXPECT_EQ(split.test.domains, std::vector<std::string>{"M"});
  EXPECT_EQ(split.train.size(), 3 * suite.domains[0].size());
  std::set<std::vector<double>> train_x;
  for (const auto& s : split.train.samples) train_x.insert(s.x);
  for (const auto& s : split.test.samples) EXPECT_EQ(train_x.count(s.x), 0u);
  for (const auto& task : benchmark_tasks()) {
    const auto sp = split_for_task(suite, task);
    EXPECT_EQ(sp.test.domains.front(), task.substr(task.size() - 1));
    for (const auto& s : sp.train.samples) EXPECT_LT(s.domain, 3u);
  }
  EXPECT_THROW(split_for_task(suite, "OCI_M"), ConfigError);
  EXPECT_THROW(split_for_task(suite, "OCM_to_M"), ConfigError);
  EXPECT_THROW(leave_one_domain_out(suite, "Z"), ConfigError);
}

TEST(UnionOf, OffsetsMakeLabelsABijection) {
  const auto& suite = reference_suite();
  const FactorDataset u = union_of(suite.domains);
  EXPECT_EQ(u.identities, 70u);
  EXPECT_EQ(u.environments, 7u);
  EXPECT_EQ(u.sensors, 12u);
  // (domain, local label) -> union label is one to one and onto.
  std::set<std::pair<std::size_t, Label>> pairs;
  std::set<Label> ids;
  std::size_t row = 0;
  for (std::size_t d = 0; d < 4; ++d) {
    for (const auto& s : suite.domains[d].samples) {
      const Sample& us = u.samples[row++];
      EXPECT_EQ(us.domain, d);
      EXPECT_EQ(us.x, s.x);
      pairs.insert({d, s.identity});
      ids.insert(us.identity);
    }
  }
  EXPECT_EQ(pairs.size(), ids.size());
  EXPECT_EQ(*ids.rbegin(), 69);
  EXPECT_EQ(*ids.begin(), 0);
}

TEST(BenchmarkSuite, Deterministic) {
  const auto a = gen_benchmark_suite(small_options());
  const auto b = gen_benchmark_suite(small_options());
  auto o = small_options();
  o.seed = 2;
  const auto c = gen_benchmark_suite(o);
  for (std::size_t d = 0; d < 4; ++d) {
    for (std::size_t i = 0; i < a.domains[d].size(); ++i) {
      EXPECT_EQ(a.domains[d].samples[i].x, b.domains[d].samples[i].x);
    }
  }
  EXPECT_NE(a.domains[0].samples[0].x, c.domains[0].samples[0].x);
}

TEST(BenchmarkSuite, SpoofIsLinearlyRecoverableWithinDomain) {
  for (const auto& ds : reference_suite().domains) {
    ProbeOptions o;
    o.epochs = 60;
    const auto r = train_probe(ds.inputs(), ds.labels("spoof"), 2, 3, o);
    EXPECT_GT(r.accuracy, 0.9) << ds.domains.front();
  }
}

TEST(BenchmarkSuite, IdentityLeaksIntoRawInputs) {
  const auto split = split_for_task(reference_suite(), "OCI_to_M");
  ProbeOptions o;
  o.epochs = 60;
  const auto r = train_probe(split.train.inputs(), split.train.labels("identity"), 55, 3, o);
  EXPECT_GT(r.accuracy, r.majority + 0.3);
}

TEST(FactorDataset, LabelsAndBatches) {
  const auto split = split_for_task(reference_suite(), "OCM_to_I");
  EXPECT_EQ(split.train.class_count("domain"), 3u);
  EXPECT_EQ(split.train.class_count("spoof"), 2u);
  EXPECT_THROW(split.train.class_count("lighting"), ConfigError);
  const std::size_t rows[] = {0, 5, 7};
  const Batch b = split.train.batch(rows, {"identity", "domain"});
  EXPECT_EQ(b.x.shape(), (Shape{3, 24}));
  EXPECT_EQ(b.factor_labels.at("identity")[1], split.train.samples[5].identity);
  EXPECT_EQ(b.y[2], split.train.samples[7].y);
  EXPECT_THROW(split.train.inputs(std::span<const std::size_t>{}), DataError);
}

TEST(SuiteFiles, CsvAndManifestRoundTrip) {
  const auto suite = gen_benchmark_suite(small_options());
  std::stringstream csv;
  write_suite_csv(csv, suite);
  const std::string manifest = suite_manifest_json(suite);
  const auto j = nlohmann::json::parse(manifest);
  EXPECT_EQ(j.at("format"), "dasn-suite");
  std::string header;
  std::getline(std::stringstream(csv.str()), header);
  EXPECT_EQ(header, "12,70,7,12,4");
  const auto back = read_suite(csv, manifest);
  ASSERT_EQ(back.domains.size(), 4u);
  for (std::size_t d = 0; d < 4; ++d) {
    ASSERT_EQ(back.domains[d].size(), suite.domains[d].size());
    for (std::size_t i = 0; i < suite.domains[d].size(); ++i) {
      const auto& a = suite.domains[d].samples[i];
      const auto& b = back.domains[d].samples[i];
      EXPECT_EQ(a.x, b.x);
      EXPECT_EQ(a.identity, b.identity);
      EXPECT_EQ(a.sensor, b.sensor);
      EXPECT_EQ(a.y, b.y);
    }
    EXPECT_EQ(back.model.alpha(d), suite.model.alpha(d));
  }
}

TEST(SuiteFiles, CorruptCsvIsRejected) {
  const auto suite = gen_benchmark_suite(small_options());
  const std::string manifest = suite_manifest_json(suite);
  std::stringstream empty;
  EXPECT_THROW(read_suite(empty, manifest), FormatError);
  std::stringstream wrong_header("12,70,7,11,4\n");
  EXPECT_THROW(read_suite(wrong_header, manifest), FormatError);
  EXPECT_THROW(
      [&] {
        std::stringstream csv;
        write_suite_csv(csv, suite);
        read_suite(csv, "{}");
      }(),
      FormatError);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e308, 0.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_THROW(parse_double("abc"), FormatError);
}
