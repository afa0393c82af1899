#include <gtest/gtest.h>

#include <random>

#include "mgl/error.hpp"
#include "mgl/risk.hpp"
#include "test_util.hpp"

namespace mgl {
namespace {

json numeric_schema(std::size_t dim) {
  json cols = json::array();
  cols.push_back({{"name", "g"}, {"kind", "categorical"}});
  for (std::size_t d = 0; d < dim; ++d) cols.push_back({{"name", "x" + std::to_string(d)}, {"kind", "numeric"}});
  cols.push_back({{"name", "label"}, {"kind", "binary-label"}});
  return {{"columns", cols}, {"label", "label"}, {"group_attributes", {"g"}}, {"group_features", false}};
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Dataset points(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
               const std::vector<std::string>& groups = {}) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<std::string> row = {groups.empty() ? "a" : groups[i]};
    for (double v : xs[i]) row.push_back(num(v));
    row.push_back(std::to_string(ys[i]));
    rows.push_back(row);
  }
  return testutil::make_dataset(numeric_schema(xs.front().size()), rows);
}

std::vector<uint8_t> all_rows(const Dataset& ds) { return std::vector<uint8_t>(ds.size(), 1); }

double training_error(const Predictor& f, const Dataset& ds) { return *empirical_risk(f, ds, Loss{}).value; }

std::vector<LearnerSpec> every_kind() {
  return {testutil::constant_learner(), testutil::logistic_learner(), testutil::tree_learner(2),
          testutil::bagged_learner(5, 3, 1)};
}

Dataset random_data(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> xs(n, std::vector<double>(dim));
  std::vector<int> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += (xs[i][d] = std::round(4.0 * gauss(rng)) / 4.0) * (d % 2 ? 1.0 : -0.5);
    ys[i] = s + 0.7 * gauss(rng) > 0.0;
  }
  return points(xs, ys);
}

TEST(Constant, MajorityLabel) {
  const Dataset ds = points({{0}, {1}, {2}}, {1, 1, 0});
  const auto f = fit(testutil::constant_learner(), ds, all_rows(ds));
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(f->predict(ds.example(i)), 1);
}

TEST(Constant, OptimalAmongConstants) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset ds = random_data(rng, 1 + rng() % 40, 1);
    const auto f = erm(testutil::constant_learner(), ds);
    const double err = training_error(*f, ds);
    EXPECT_LE(err, training_error(ConstantPredictor(0.0), ds));
    EXPECT_LE(err, training_error(ConstantPredictor(1.0), ds));
  }
}

TEST(Logistic, SeparableDataHasZeroTrainingError) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  // Separator x0 + x1 = 0 with margin 0.5 (distance to the line).
  while (xs.size() < 200) {
    const double a = u(rng), b = u(rng);
    const double dist = (a + b) / std::sqrt(2.0);
    if (std::abs(dist) < 0.5) continue;
    xs.push_back({a, b});
    ys.push_back(dist > 0);
  }
  const Dataset ds = points(xs, ys);
  const auto f = erm(testutil::logistic_learner(), ds);
  EXPECT_EQ(training_error(*f, ds), 0.0);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = 60, dim = 3;
  std::vector<double> z(n * dim);
  std::vector<uint8_t> y(n);
  for (auto& v : z) v = gauss(rng);
  for (auto& v : y) v = static_cast<uint8_t>(rng() % 2);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> params(dim + 1);
    for (auto& p : params) p = gauss(rng);
    std::vector<double> grad;
    detail::logistic_objective(z, dim, y, params, &grad);
    for (std::size_t k = 0; k <= dim; ++k) {
      const double h = 1e-6;
      auto plus = params, minus = params;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (detail::logistic_objective(z, dim, y, plus, nullptr) -
                         detail::logistic_objective(z, dim, y, minus, nullptr)) /
                        (2.0 * h);
      EXPECT_LE(std::abs(fd - grad[k]), 1e-5 * std::max(1.0, std::abs(grad[k]))) << trial << " " << k;
    }
  }
}

TEST(Logistic, ScoreThresholdMatchesPrediction) {
  std::mt19937_64 rng(7);
  const Dataset ds = random_data(rng, 300, 2);
  const auto f = erm(testutil::logistic_learner(), ds);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(f->predict(ds.example(i)), f->score(ds.example(i)) >= 0.5 ? 1 : 0);
  }
}

TEST(Tree, DepthOneThreshold) {
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  for (int i = 0; i <= 60; ++i) {
    xs.push_back({i / 10.0});
    ys.push_back(i / 10.0 > 3.0);
  }
  const Dataset ds = points(xs, ys);
  const auto f = erm(testutil::tree_learner(1), ds);
  EXPECT_EQ(training_error(*f, ds), 0.0);
  const auto& tree = dynamic_cast<const DecisionTreePredictor&>(*f);
  EXPECT_EQ(tree.depth(), 1);
  EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, 3.05);
}

TEST(Tree, DepthOneOnXorIsHalf) {
  const std::vector<std::vector<double>> xs = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const Dataset ds = points(xs, {0, 1, 1, 0});
  // Oracle: every single axis split leaves error 0.5.
  for (int f = 0; f < 2; ++f) {
    int best = 4;
    for (int left_label : {0, 1}) {
      int errors = 0;
      for (std::size_t i = 0; i < 4; ++i) {
        const int pred = xs[i][static_cast<std::size_t>(f)] <= 0.5 ? left_label : 1 - left_label;
        errors += pred != ds.label(i);
      }
      best = std::min(best, errors);
    }
    EXPECT_EQ(best, 2);
  }
  EXPECT_EQ(training_error(*erm(testutil::tree_learner(1), ds), ds), 0.5);
  EXPECT_EQ(training_error(*erm(testutil::tree_learner(2), ds), ds), 0.5);
}

TEST(Tree, NeverExceedsDepthAndEverySplitReducesEntropy) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int depth = 1 + trial % 4;
    const Dataset ds = random_data(rng, 30 + rng() % 200, 3);
    const auto f = erm(testutil::tree_learner(depth), ds);
    const auto* tree = dynamic_cast<const DecisionTreePredictor*>(f.get());
    if (tree == nullptr) continue;  // single-class sample
    EXPECT_LE(tree->depth(), depth);
    const auto& nodes = tree->nodes();
    // Route training rows and check the entropy gain at each split.
    std::vector<std::vector<std::size_t>> at(nodes.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      int k = 0;
      at[0].push_back(i);
      while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
        const auto& nd = nodes[static_cast<std::size_t>(k)];
        k = ds.features(i)[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        at[static_cast<std::size_t>(k)].push_back(i);
      }
    }
    auto entropy = [&](const std::vector<std::size_t>& rows) {
      double pos = 0;
      for (auto r : rows) pos += ds.label(r);
      return detail::binary_entropy(pos, static_cast<double>(rows.size()));
    };
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k].feature < 0) continue;
      const auto& l = at[static_cast<std::size_t>(nodes[k].left)];
      const auto& r = at[static_cast<std::size_t>(nodes[k].right)];
      ASSERT_FALSE(l.empty());
      ASSERT_FALSE(r.empty());
      const double n = static_cast<double>(at[k].size());
      const double after = (static_cast<double>(l.size()) * entropy(l) + static_cast<double>(r.size()) * entropy(r)) / n;
      EXPECT_GT(entropy(at[k]) - after, 0.0);
    }
  }
}

TEST(Bagged, VoteFraction) {
  std::mt19937_64 rng(13);
  const Dataset ds = random_data(rng, 400, 2);
  const auto f = erm(testutil::bagged_learner(7, 3, 5), ds);
  const auto& bag = dynamic_cast<const BaggedTreesPredictor&>(*f);
  ASSERT_EQ(bag.trees().size(), 7u);
  for (std::size_t i = 0; i < ds.size(); i += 13) {
    int votes = 0;
    for (const auto& t : bag.trees()) votes += t.predict(ds.example(i));
    EXPECT_DOUBLE_EQ(f->score(ds.example(i)), votes / 7.0);
  }
  for (const auto& t : bag.trees()) EXPECT_LE(t.depth(), 3);
}

TEST(Fit, SingleExampleGroupPredictsItsLabel) {
  const Dataset ds = points({{0.0, 1.0}, {1.0, 2.0}, {3.0, -1.0}}, {1, 0, 1}, {"a", "b", "a"});
  const Group b{"b", {{"g", "b"}}};
  for (const auto& spec : every_kind()) {
    const auto f = group_erm(spec, ds, b);
    EXPECT_EQ(f->predict(ds.example(1)), 0) << spec.name();
    EXPECT_NE(dynamic_cast<const ConstantPredictor*>(f.get()), nullptr) << spec.name();
  }
}

TEST(Fit, GroupErmOnRootEqualsErm) {
  std::mt19937_64 rng(17);
  const Dataset ds = random_data(rng, 500, 2);
  for (const auto& spec : every_kind()) {
    const auto a = erm(spec, ds);
    const auto b = group_erm(spec, ds, Group::root());
    EXPECT_EQ(a->to_json().dump(), b->to_json().dump()) << spec.name();
  }
}

TEST(Fit, Deterministic) {
  std::mt19937_64 rng(19);
  const Dataset ds = random_data(rng, 700, 3);
  for (const auto& spec : every_kind()) {
    const auto a = erm(spec, ds);
    const auto b = erm(spec, ds);
    for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(a->score(ds.example(i)), b->score(ds.example(i)));
  }
}

TEST(Fit, Errors) {
  const Dataset ds = points({{0.0}, {1.0}}, {1, 0});
  std::vector<uint8_t> none(2, 0);
  for (const auto& spec : every_kind()) EXPECT_THROW(fit(spec, ds, none), EmptyGroupError);
  EXPECT_THROW(group_erm(testutil::constant_learner(), ds, Group{"z", {{"g", "z"}}}), EmptyGroupError);
  EXPECT_THROW(LearnerSpec::from_json(json{{"kind", "tree"}, {"max_depth", 0}}), ConfigError);
  EXPECT_THROW(LearnerSpec::from_json(json{{"kind", "bagged_trees"}, {"trees", 0}}), ConfigError);
  EXPECT_THROW(LearnerSpec::from_json(json{{"kind", "logistic"}, {"max_iter", 0}}), ConfigError);
  EXPECT_THROW(LearnerSpec::from_json(json{{"kind", "svm"}}), ConfigError);
  EXPECT_THROW(LearnerSpec::from_json(json{{"kind", "tree"}, {"depth", 2}}), ConfigError);
}

TEST(Fit, JsonRoundTrip) {
  std::mt19937_64 rng(23);
  const Dataset ds = random_data(rng, 300, 2);
  for (const auto& spec : every_kind()) {
    const auto f = erm(spec, ds);
    const auto g = predictor_from_json(f->to_json());
    for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(f->score(ds.example(i)), g->score(ds.example(i)));
    EXPECT_EQ(g->provenance().group, "ALL");
    const LearnerSpec again = LearnerSpec::from_json(spec.to_json());
    EXPECT_EQ(again.name(), spec.name());
  }
}

TEST(GroupErmCache, MatchesDirectFits) {
  std::mt19937_64 rng(29);
  const auto model = testutil::random_product_model(rng, {2, 3}, 800, 0.1);
  const auto data = make_synthetic(model, 2).data;
  const auto tree = testutil::product_tree(data, {"a0", "a1"});
  const GroupErmCache cache(testutil::tree_learner(2), data, tree);
  for (std::size_t node = 0; node < tree->size(); ++node) {
    if (cache.count(node) == 0) {
      EXPECT_EQ(cache.predictor(node), nullptr);
      continue;
    }
    const auto direct = group_erm(testutil::tree_learner(2), data, tree->group(node));
    EXPECT_EQ(cache.predictor(node)->to_json().dump(), direct->to_json().dump());
  }
}

}  // namespace
}  // namespace mgl
