#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mgl/data.hpp"
#include "mgl/groups.hpp"

namespace mgl {

enum class LearnerKind { kConstant, kLogistic, kTree, kBaggedTrees };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kConstant;
  // tree / bagged_trees
  int max_depth = 2;
  int trees = 10;
  // Features sampled per split in bagged trees; 0 means round(sqrt(d)).
  int max_features = 0;
  // logistic
  double learning_rate = 1.0;
  int max_iter = 500;
  double tolerance = 1e-6;
  uint64_t seed = 0;

  // Short label used in reports, e.g. "logistic", "tree2", "bagged10".
  std::string name() const;
  void validate() const;

  static LearnerSpec from_json(const json& doc);
  json to_json() const;
};

struct Provenance {
  std::string learner;
  std::string group;
};

// A hypothesis x -> {0,1} with a score in [0,1]; predict(x) == (score(x) >= 0.5).
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual double score(const ExampleView& x) const = 0;
  virtual int predict(const ExampleView& x) const { return score(x) >= 0.5 ? 1 : 0; }
  virtual json to_json() const = 0;

  const Provenance& provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = std::move(p); }

 protected:
  json provenance_json() const {
    return {{"learner", provenance_.learner}, {"group", provenance_.group}};
  }

 private:
  Provenance provenance_;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

class ConstantPredictor final : public Predictor {
 public:
  explicit ConstantPredictor(double positive_rate) : rate_(positive_rate) {}
  double score(const ExampleView&) const override { return rate_; }
  json to_json() const override;
  double rate() const { return rate_; }

 private:
  double rate_;
};

class LogisticPredictor final : public Predictor {
 public:
  LogisticPredictor(std::vector<double> mean, std::vector<double> scale, std::vector<double> weights,
                    double intercept);
  double score(const ExampleView& x) const override;
  int predict(const ExampleView& x) const override { return margin(x) >= 0.0 ? 1 : 0; }
  double margin(const ExampleView& x) const;
  json to_json() const override;

  std::span<const double> weights() const { return weights_; }
  double intercept() const { return intercept_; }

 private:
  std::vector<double> mean_, scale_, weights_;
  double intercept_;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;   // x[feature] <= threshold
  int right = -1;
  double positive_rate = 0.0;
};

class DecisionTreePredictor final : public Predictor {
 public:
  explicit DecisionTreePredictor(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}
  double score(const ExampleView& x) const override;
  json to_json() const override;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  // Length of the longest root-to-leaf path (a single leaf has depth 0).
  int depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

class BaggedTreesPredictor final : public Predictor {
 public:
  explicit BaggedTreesPredictor(std::vector<DecisionTreePredictor> trees) : trees_(std::move(trees)) {}
  // Fraction of trees voting 1.
  double score(const ExampleView& x) const override;
  json to_json() const override;
  const std::vector<DecisionTreePredictor>& trees() const { return trees_; }

 private:
  std::vector<DecisionTreePredictor> trees_;
};

// Fits on the rows with mask[i] != 0. Throws EmptyGroupError on an empty mask.
// Single-class training data yields a constant predictor for every kind.
PredictorPtr fit(const LearnerSpec& spec, const Dataset& ds, std::span<const uint8_t> mask);
PredictorPtr fit_rows(const LearnerSpec& spec, const Dataset& ds, std::span<const uint32_t> rows);

PredictorPtr erm(const LearnerSpec& spec, const Dataset& ds);
PredictorPtr group_erm(const LearnerSpec& spec, const Dataset& ds, const Group& g);

// Rebuilds a base-learner predictor from its to_json() form.
PredictorPtr predictor_from_json(const json& doc);

// Group ERMs for every node of a tree on one training set, fitted once and
// shared by all algorithms. Fits run concurrently across nodes; afterwards
// the cache is read-only.
class GroupErmCache {
 public:
  GroupErmCache(LearnerSpec spec, const Dataset& train, std::shared_ptr<const GroupTree> tree);

  const LearnerSpec& spec() const { return spec_; }
  const Dataset& data() const { return *train_; }
  const GroupTree& tree() const { return *tree_; }
  std::shared_ptr<const GroupTree> tree_ptr() const { return tree_; }

  // nullptr when the node has no training rows.
  const PredictorPtr& predictor(std::size_t node) const { return fits_[node]; }
  const PredictorPtr& erm() const { return fits_[0]; }
  std::span<const uint32_t> rows(std::size_t node) const { return rows_[node]; }
  std::size_t count(std::size_t node) const { return rows_[node].size(); }

 private:
  LearnerSpec spec_;
  const Dataset* train_;
  std::shared_ptr<const GroupTree> tree_;
  std::vector<std::vector<uint32_t>> rows_;
  std::vector<PredictorPtr> fits_;
};

namespace detail {

// Mean logistic loss of (weights, intercept) on standardized rows and its
// gradient; gradient layout is [weights..., intercept].
double logistic_objective(std::span<const double> z, std::size_t dim, std::span<const uint8_t> labels,
                          std::span<const double> params, std::vector<double>* gradient);

// Shannon entropy (nats) of a Bernoulli(positives / total).
double binary_entropy(double positives, double total);

}  // namespace detail

}  // namespace mgl
