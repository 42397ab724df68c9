#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dasn/error.hpp"
#include "dasn/trainer.hpp"
#include "support/oracles.hpp"

using namespace dasn;

namespace {

const FactorDataset& small_train() {
  static const FactorDataset ds = [] {
    FactorModelOptions o;
    o.samples_per_domain = 40;
    o.input_dim = 6;
    return split_for_task(gen_benchmark_suite(o), "OCI_to_M").train;
  }();
  return ds;
}

TrainConfig small_config(Mode mode) {
  TrainConfig c;
  c.mode = mode;
  if (mode == Mode::baseline) c.factors.clear();
  c.batch_size = 16;
  c.epochs = 2;
  c.feature_dim = 5;
  c.hidden_dim = 6;
  c.learning_rate = 1e-2;
  return c;
}

Batch first_batch(const TrainConfig& c, std::size_t n = 16) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i * 7;
  return small_train().batch(rows, c.active_factors());
}

std::vector<const ParamGroup*> named(const DasnModel& m, std::vector<std::string> names) {
  std::vector<const ParamGroup*> out;
  for (const auto* g : m.groups())
    if (std::find(names.begin(), names.end(), g->name) != names.end()) out.push_back(g);
  return out;
}

std::vector<std::string> head_names(const DasnModel& m) {
  std::vector<std::string> out;
  for (const auto& f : m.config().factors) {
    out.push_back("I." + f.name);
    out.push_back("D." + f.name);
  }
  return out;
}

}  // namespace

TEST(Mode, ParseAndPrint) {
  for (Mode m : {Mode::baseline, Mode::asn, Mode::asn_d, Mode::dasn}) EXPECT_EQ(parse_mode(to_string(m)), m);
  EXPECT_THROW(parse_mode("adversarial"), ConfigError);
}

TEST(TrainConfig, ActiveFactorsPerMode) {
  EXPECT_TRUE(small_config(Mode::baseline).active_factors().empty());
  EXPECT_EQ(small_config(Mode::asn_d).active_factors(), std::vector<std::string>{"domain"});
  EXPECT_EQ(small_config(Mode::dasn).active_factors().size(), 3u);
  EXPECT_FALSE(small_config(Mode::asn).uses_secondary());
  EXPECT_TRUE(small_config(Mode::dasn).uses_secondary());
}

TEST(InitState, BuildsHeadsForActiveFactors) {
  const auto s = init_state(small_config(Mode::dasn), small_train());
  EXPECT_TRUE(s.model.has_secondary());
  EXPECT_EQ(s.model.discriminator("identity").layers.back().out_features(), 55u);
  EXPECT_EQ(s.model.discriminator("sensor").layers.back().out_features(), 10u);
  const auto b = init_state(small_config(Mode::baseline), small_train());
  EXPECT_TRUE(b.model.config().factors.empty());
  const auto d = init_state(small_config(Mode::asn_d), small_train());
  EXPECT_EQ(d.model.discriminator("domain").layers.back().out_features(), 3u);
}

TEST(InitState, RejectsBadConfigs) {
  auto c = small_config(Mode::baseline);
  c.factors = {"identity"};
  EXPECT_THROW(init_state(c, small_train()), ConfigError);
  c = small_config(Mode::dasn);
  c.factors.clear();
  EXPECT_THROW(init_state(c, small_train()), ConfigError);
  c = small_config(Mode::dasn);
  c.batch_size = 0;
  EXPECT_THROW(init_state(c, small_train()), ConfigError);
  c = small_config(Mode::dasn);
  c.learning_rate = -1;
  EXPECT_THROW(init_state(c, small_train()), ConfigError);
}

TEST(TrainIteration, BaselineOnlyMovesEncoderAndClassifier) {
  const auto c = small_config(Mode::baseline);
  auto s = init_state(c, small_train());
  const auto before = snapshot(s.model.groups());
  const auto secondary = snapshot(named(s.model, {"S"}));
  train_iteration(s, c, first_batch(c));
  const auto after = snapshot(s.model.groups());
  EXPECT_NE(before, after);
  EXPECT_EQ(secondary, snapshot(named(s.model, {"S"})));
  EXPECT_EQ(s.iteration, 1u);
  EXPECT_EQ(s.history.size(), 1u);
  EXPECT_TRUE(s.step2.first_moment.empty());
}

TEST(TrainIteration, EachStepFreezesTheOtherSide) {
  const auto c = small_config(Mode::dasn);
  auto s = init_state(c, small_train());
  const Batch batch = first_batch(c);
  const auto heads = head_names(s.model);
  for (int it = 0; it < 5; ++it) {
    const auto heads_before = snapshot(named(s.model, heads));
    const auto trunk_before = snapshot(named(s.model, {"E", "C", "S"}));
    // Step 1 alone: heads frozen.
    {
      Tape tape;
      ParamBinding b(&tape);
      const auto t = step1_objective(s.model, b, batch, c.weights);
      adam_step(s.step1, s.model.groups({"E", "C", "S"}), b.gradients(t.total));
    }
    EXPECT_EQ(heads_before, snapshot(named(s.model, heads)));
    EXPECT_NE(trunk_before, snapshot(named(s.model, {"E", "C", "S"})));
    const auto trunk_mid = snapshot(named(s.model, {"E", "C", "S"}));
    // Step 2 alone: trunk frozen.
    {
      Tape tape;
      ParamBinding b(&tape);
      const auto t = step2_objective(s.model, b, batch, c.weights);
      adam_step(s.step2, s.model.groups(heads), b.gradients(t.total));
    }
    EXPECT_EQ(trunk_mid, snapshot(named(s.model, {"E", "C", "S"})));
    EXPECT_NE(heads_before, snapshot(named(s.model, heads)));
  }
}

TEST(TrainIteration, MatchesManualTwoStepUpdate) {
  const auto c = small_config(Mode::dasn);
  auto a = init_state(c, small_train());
  auto manual = a;
  const Batch batch = first_batch(c);
  train_iteration(a, c, batch);
  {
    Tape tape;
    ParamBinding b(&tape);
    const auto t = step1_objective(manual.model, b, batch, c.weights);
    adam_step(manual.step1, manual.model.groups({"E", "C", "S"}), b.gradients(t.total));
  }
  {
    Tape tape;
    ParamBinding b(&tape);
    const auto t = step2_objective(manual.model, b, batch, c.weights);
    adam_step(manual.step2, manual.model.groups(head_names(manual.model)), b.gradients(t.total));
  }
  EXPECT_EQ(snapshot(a.model.groups()), snapshot(manual.model.groups()));
}

TEST(Train, DeterministicForSameSeed) {
  auto c = small_config(Mode::dasn);
  const auto a = train(c, small_train());
  const auto b = train(c, small_train());
  EXPECT_EQ(snapshot(a.model.groups()), snapshot(b.model.groups()));
  EXPECT_EQ(a.history.cls, b.history.cls);
  c.seed = 2;
  const auto d = train(c, small_train());
  EXPECT_NE(snapshot(a.model.groups()), snapshot(d.model.groups()));
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  auto c = small_config(Mode::dasn);
  c.epochs = 0;
  const auto r = train(c, small_train());
  EXPECT_EQ(r.history.size(), 0u);
  EXPECT_EQ(snapshot(r.model.groups()), snapshot(init_state(c, small_train()).model.groups()));
}

TEST(Train, ZeroLearningRateFullBatchGivesConstantLosses) {
  auto c = small_config(Mode::dasn);
  c.learning_rate = 0.0;
  c.batch_size = small_train().size();
  c.epochs = 3;
  const auto r = train(c, small_train());
  ASSERT_EQ(r.history.size(), 3u);
  // Rows arrive in a different order each epoch, so sums differ only by rounding.
  EXPECT_NEAR(r.history.cls[0], r.history.cls[2], 1e-12);
  for (const auto& k : r.history.factors) EXPECT_NEAR(r.history.sif.at(k)[0], r.history.sif.at(k)[2], 1e-12);
}

TEST(Train, IterationCountMatchesBatches) {
  const auto c = small_config(Mode::asn);
  const auto r = train(c, small_train());
  const std::size_t per_epoch = (small_train().size() + c.batch_size - 1) / c.batch_size;
  EXPECT_EQ(r.history.size(), per_epoch * c.epochs);
  EXPECT_TRUE(r.history.scls.empty());
  EXPECT_FALSE(r.history.secondary);
}

TEST(Train, HugeLearningRateDiverges) {
  auto c = small_config(Mode::dasn);
  c.learning_rate = 1e300;
  try {
    train(c, small_train());
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("divergence"), std::string::npos);
  }
}

TEST(ModeLattice, ZeroLambdaNoSecondaryMatchesBaselineGradients) {
  auto toy = oracle::random_toy(77);
  for (auto& [k, w] : toy.weights.sif) w = 0.0;
  Tape t1;
  ParamBinding b1(&t1);
  const auto full = b1.gradients(step1_objective(toy.model, b1, toy.batch, toy.weights, {false}).total);
  const DasnModel bare = toy.model.without_heads();
  Tape t2;
  ParamBinding b2(&t2);
  const auto base = b2.gradients(step1_objective(bare, b2, toy.batch, toy.weights).total);
  for (const auto& [name, g] : base) {
    ASSERT_TRUE(full.count(name)) << name;
    EXPECT_TRUE(full.at(name).bitwise_equal(g)) << name;
  }
}

TEST(HistoryCsv, ColumnsFollowMode) {
  std::ostringstream dasn_csv, asn_csv;
  write_history_csv(dasn_csv, train(small_config(Mode::dasn), small_train()).history);
  write_history_csv(asn_csv, train(small_config(Mode::asn), small_train()).history);
  const auto header = [](const std::string& text) { return text.substr(0, text.find('\n')); };
  EXPECT_EQ(header(dasn_csv.str()),
            "iteration,L_cls,L_sif.identity,L_scls.identity,L_sif.environment,L_scls.environment,"
            "L_sif.sensor,L_scls.sensor");
  EXPECT_EQ(header(asn_csv.str()), "iteration,L_cls,L_sif.identity,L_sif.environment,L_sif.sensor");
  const std::string body = dasn_csv.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(body.begin(), body.end(), '\n')), 1 + 2 * 8u);
}

TEST(TrainState, EncodeDecodeRoundTrip) {
  const auto c = small_config(Mode::dasn);
  auto s = init_state(c, small_train());
  train_epochs(s, TrainConfig{c}, small_train());
  const auto image = encode_train_state(s);
  const TrainState r = decode_train_state(image);
  EXPECT_EQ(r.epoch, s.epoch);
  EXPECT_EQ(r.iteration, s.iteration);
  EXPECT_EQ(snapshot(r.model.groups()), snapshot(s.model.groups()));
  EXPECT_EQ(r.step1.step, s.step1.step);
  EXPECT_EQ(r.step2.first_moment, s.step2.first_moment);
  EXPECT_EQ(r.step1.second_moment, s.step1.second_moment);
  EXPECT_EQ(r.history.cls, s.history.cls);
  EXPECT_EQ(r.history.scls, s.history.scls);
  EXPECT_EQ(encode_train_state(r), image);
  auto bad = image;
  bad.resize(bad.size() - 3);
  EXPECT_THROW(decode_train_state(bad), FormatError);
}

TEST(TrainState, ResumeAtEpochBoundaryIsExact) {
  auto c = small_config(Mode::dasn);
  c.epochs = 3;
  const auto straight = train(c, small_train());
  auto half = c;
  half.epochs = 1;
  auto s = init_state(c, small_train());
  train_epochs(s, half, small_train());
  TrainState resumed = decode_train_state(encode_train_state(s));
  std::size_t calls = 0;
  train_epochs(resumed, c, small_train(), [&](const TrainState&) { ++calls; });
  EXPECT_EQ(calls, 2u);
  EXPECT_EQ(snapshot(resumed.model.groups()), snapshot(straight.model.groups()));
  EXPECT_EQ(resumed.history.cls, straight.history.cls);
}

TEST(Trend, ConstantHistoryHasZeroSlope) {
  const std::vector<double> v(200, 1.5);
  const auto t = trend(v, {});
  EXPECT_EQ(t.slope, 0.0);
  EXPECT_EQ(t.monotonicity, 0.0);
  EXPECT_EQ(t.windows, 10u);
}

TEST(Trend, IncreasingHistory) {
  std::vector<double> v(200);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i);
  const auto t = trend(v, {});
  EXPECT_NEAR(t.slope, 0.01, 1e-12);
  EXPECT_EQ(t.monotonicity, 1.0);
  const auto late = trend(v, DivergenceOptions{20, 0.2});
  EXPECT_EQ(late.windows, 8u);
  EXPECT_NEAR(late.slope, 0.01, 1e-12);
}

TEST(Trend, StartFractionSkipsEarlyDip) {
  std::vector<double> v(400);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i < 80 ? 5.0 - 0.05 * static_cast<double>(i) : 1.0 + 0.001 * static_cast<double>(i);
  EXPECT_LT(trend(v, {}).slope, 0.0);
  EXPECT_GT(trend(v, DivergenceOptions{20, 0.2}).slope, 0.0);
}

TEST(Trend, TooShortIsAContractError) {
  const std::vector<double> v(30, 1.0);
  EXPECT_THROW(trend(v, {}), ContractError);
  EXPECT_THROW(trend(v, DivergenceOptions{0, 0.0}), ContractError);
}

TEST(DivergenceReport, OneEntryPerFactor) {
  LossHistory h;
  h.factors = {"identity", "sensor"};
  h.sif["identity"] = std::vector<double>(100, 2.0);
  h.sif["sensor"] = std::vector<double>(100, 1.0);
  for (std::size_t i = 0; i < 100; ++i) h.sif["sensor"][i] += 0.1 * static_cast<double>(i);
  const auto r = divergence_report(h);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.at("identity").slope, 0.0);
  EXPECT_GT(r.at("sensor").slope, 0.0);
}
