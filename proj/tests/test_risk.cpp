#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "mgl/error.hpp"
#include "mgl/risk.hpp"
#include "test_util.hpp"

namespace mgl {
namespace {

json one_attr_schema() {
  return {{"columns",
           {{{"name", "g"}, {"kind", "categorical"}},
            {{"name", "x"}, {"kind", "numeric"}},
            {{"name", "label"}, {"kind", "binary-label"}}}},
          {"label", "label"},
          {"group_attributes", {"g"}}};
}

Dataset labels_only(const std::vector<int>& labels, const std::vector<std::string>& groups = {}) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    rows.push_back({groups.empty() ? "a" : groups[i], std::to_string(i), std::to_string(labels[i])});
  }
  return testutil::make_dataset(one_attr_schema(), rows);
}

// Random threshold on the numeric feature with a random score slope.
class ThresholdPredictor final : public Predictor {
 public:
  ThresholdPredictor(std::size_t feature, double cut, double slope) : feature_(feature), cut_(cut), slope_(slope) {}
  double score(const ExampleView& x) const override {
    return 1.0 / (1.0 + std::exp(-slope_ * (x.features[feature_] - cut_)));
  }
  json to_json() const override { return json::object(); }

 private:
  std::size_t feature_;
  double cut_, slope_;
};

TEST(Loss, Values) {
  const Loss zo{};
  EXPECT_EQ(zo(1, 0.9, 1), 0.0);
  EXPECT_EQ(zo(0, 0.1, 1), 1.0);
  const Loss cl{LossKind::kClippedLogistic};
  EXPECT_DOUBLE_EQ(cl(0, 0.5, 1), std::log(2.0) / std::log(1e3));
  EXPECT_EQ(cl(0, 0.0, 1), 1.0);
  EXPECT_EQ(cl(0, 1.0, 1), 0.0);
  for (double s = 0.0; s <= 1.0; s += 0.01) {
    for (int y : {0, 1}) {
      EXPECT_GE(cl(0, s, y), 0.0);
      EXPECT_LE(cl(0, s, y), 1.0);
    }
  }
}

TEST(Loss, JsonForms) {
  EXPECT_EQ(Loss::from_json("zero_one").kind, LossKind::kZeroOne);
  const Loss l = Loss::from_json(json{{"kind", "clipped_logistic"}, {"clip_cap", 2.0}});
  EXPECT_EQ(l.clip_cap, 2.0);
  EXPECT_EQ(Loss::from_json(l.to_json()).clip_cap, 2.0);
  EXPECT_THROW(Loss::from_json("hinge"), ConfigError);
  EXPECT_THROW(Loss::from_json(json{{"kind", "zero_one"}, {"x", 1}}), ConfigError);
  EXPECT_THROW(Loss::from_json(json{{"kind", "clipped_logistic"}, {"clip_cap", 0}}), ConfigError);
}

TEST(EmpiricalRisk, HandExamples) {
  const Dataset ds = labels_only({1, 0, 0, 1});
  const ConstantPredictor one(1.0);
  EXPECT_EQ(*empirical_risk(one, ds, Loss{}).value, 0.5);
  const Dataset pos = labels_only({1, 1, 1});
  EXPECT_EQ(*empirical_risk(one, pos, Loss{}).value, 0.0);
  EXPECT_EQ(empirical_risk(one, ds, Loss{}).support, 4u);
}

TEST(GroupRisk, RootAndAbsent) {
  const Dataset ds = labels_only({1, 0, 0, 1}, {"a", "a", "b", "b"});
  const ConstantPredictor one(1.0);
  EXPECT_EQ(*group_risk(one, ds, Group::root(), Loss{}).value, *empirical_risk(one, ds, Loss{}).value);
  EXPECT_EQ(*group_risk(one, ds, Group{"a", {{"g", "a"}}}, Loss{}).value, 0.5);
  const RiskValue empty = group_risk(one, ds, Group{"c", {{"g", "c"}}}, Loss{});
  EXPECT_TRUE(empty.absent());
  EXPECT_EQ(empty.support, 0u);
}

TEST(GroupRisk, MatchesMaskedLoopOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 9000;
    std::vector<int> labels(n);
    std::vector<std::string> groups(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = u(rng) < 0.4;
      groups[i] = u(rng) < 0.3 ? "a" : "b";
    }
    const Dataset ds = labels_only(labels, groups);
    const ThresholdPredictor f(0, u(rng) * static_cast<double>(n), 0.01 + u(rng));
    const Group g{"a", {{"g", "a"}}};
    for (LossKind kind : {LossKind::kZeroOne, LossKind::kClippedLogistic}) {
      const Loss loss{kind};
      long double total = 0.0L;
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (groups[i] != "a") continue;
        total += loss.evaluate(f, ds.example(i), ds.label(i));
        ++count;
      }
      const RiskValue r = group_risk(f, ds, g, loss);
      if (count == 0) {
        EXPECT_TRUE(r.absent());
        continue;
      }
      EXPECT_NEAR(*r.value, static_cast<double>(total / count), 1e-12);
      EXPECT_GE(*r.value, 0.0);
      EXPECT_LE(*r.value, 1.0);
    }
  }
}

TEST(GroupRisk, ZeroOneIsOneMinusAccuracy) {
  std::mt19937_64 rng(6);
  std::vector<int> labels(1000);
  for (auto& y : labels) y = static_cast<int>(rng() % 2);
  const Dataset ds = labels_only(labels);
  const ThresholdPredictor f(0, 400.0, 1.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) correct += f.predict(ds.example(i)) == ds.label(i);
  EXPECT_EQ(*empirical_risk(f, ds, Loss{}).value, static_cast<double>(1000 - correct) / 1000.0);
}

TEST(GroupRisk, PermutationInvariant) {
  std::mt19937_64 rng(9);
  std::vector<std::vector<std::string>> rows;
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 5000; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", u(rng));
    rows.push_back({rng() % 2 ? "a" : "b", buf, rng() % 3 ? "1" : "0"});
  }
  const Dataset ds = testutil::make_dataset(one_attr_schema(), rows);
  std::shuffle(rows.begin(), rows.end(), rng);
  const Dataset shuffled = testutil::make_dataset(one_attr_schema(), rows);
  const ThresholdPredictor f(0, 0.1, 2.0);
  const Group g{"a", {{"g", "a"}}};
  for (LossKind kind : {LossKind::kZeroOne, LossKind::kClippedLogistic}) {
    EXPECT_NEAR(*group_risk(f, ds, g, Loss{kind}).value, *group_risk(f, shuffled, g, Loss{kind}).value, 1e-12);
  }
}

TEST(DecomposeCheck, HandExample) {
  // Constant 1 on labels [1,0,0,0] gives losses (0,1,1,1).
  const Dataset ds = labels_only({1, 0, 0, 0});
  const ConstantPredictor one(1.0);
  const std::vector<std::vector<uint8_t>> parts = {{1, 1, 0, 0}, {0, 0, 1, 1}};
  EXPECT_EQ(*empirical_risk(one, ds, Loss{}).value, 0.75);
  EXPECT_EQ(*rows_risk(one, ds, std::vector<uint32_t>{0, 1}, Loss{}).value, 0.5);
  EXPECT_EQ(*rows_risk(one, ds, std::vector<uint32_t>{2, 3}, Loss{}).value, 1.0);
  EXPECT_EQ(decompose_check(one, ds, std::span<const std::vector<uint8_t>>(parts), Loss{}), 0.0);
  const std::vector<std::vector<uint8_t>> single = {{1, 0, 1, 1}};
  EXPECT_EQ(decompose_check(one, ds, std::span<const std::vector<uint8_t>>(single), Loss{}), 0.0);
}

TEST(DecomposeCheck, OverlapNamesGroups) {
  const Dataset ds = labels_only({1, 0}, {"a", "b"});
  const ConstantPredictor one(1.0);
  const std::vector<Group> parts = {Group::root(), Group{"a", {{"g", "a"}}}};
  try {
    decompose_check(one, ds, std::span<const Group>(parts), Loss{});
    FAIL() << "expected ValueError";
  } catch (const ValueError& e) {
    EXPECT_NE(std::string(e.what()).find("'ALL' and 'a'"), std::string::npos) << e.what();
  }
}

TEST(DecomposeCheck, RandomPartitions) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 3000;
    std::vector<int> labels(n);
    for (auto& y : labels) y = u(rng) < 0.5;
    const Dataset ds = labels_only(labels);
    const std::size_t k = 1 + rng() % 6;
    std::vector<std::vector<uint8_t>> parts(k, std::vector<uint8_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
      // Some rows fall outside every part.
      const std::size_t p = rng() % (k + 1);
      if (p < k) parts[p][i] = 1;
    }
    const ThresholdPredictor f(0, u(rng) * static_cast<double>(n), u(rng));
    for (LossKind kind : {LossKind::kZeroOne, LossKind::kClippedLogistic}) {
      EXPECT_LT(decompose_check(f, ds, std::span<const std::vector<uint8_t>>(parts), Loss{kind}), 1e-12);
    }
  }
}

}  // namespace
}  // namespace mgl
