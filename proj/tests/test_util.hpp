#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "mgl/data.hpp"
#include "mgl/groups.hpp"
#include "mgl/learners.hpp"

namespace mgl::testutil {

inline Dataset make_dataset(const json& schema, const std::vector<std::vector<std::string>>& rows) {
  return Dataset::from_rows(AttributeSchema::from_json(schema), rows);
}

inline json two_leaf_schema() {
  return {{"columns",
           {{{"name", "leaf"}, {"kind", "categorical"}},
            {{"name", "x"}, {"kind", "numeric"}},
            {{"name", "label"}, {"kind", "binary-label"}}}},
          {"label", "label"},
          {"group_attributes", {"leaf"}}};
}

// Leaf A holds three examples labeled 1, leaf B one example labeled 0.
struct TwoLeaf {
  Dataset data;
  std::shared_ptr<const GroupTree> tree;
};

inline TwoLeaf two_leaf() {
  TwoLeaf f;
  f.data = make_dataset(two_leaf_schema(), {{"A", "0.1", "1"}, {"A", "0.2", "1"}, {"A", "0.3", "1"}, {"B", "0.4", "0"}});
  const std::vector<std::string> order = {"leaf"};
  f.tree = std::make_shared<const GroupTree>(build_hierarchy(f.data, order));
  return f;
}

inline LearnerSpec constant_learner() { return LearnerSpec{}; }

inline LearnerSpec logistic_learner() {
  LearnerSpec s;
  s.kind = LearnerKind::kLogistic;
  return s;
}

inline LearnerSpec tree_learner(int depth) {
  LearnerSpec s;
  s.kind = LearnerKind::kTree;
  s.max_depth = depth;
  return s;
}

inline LearnerSpec bagged_learner(int trees, int depth, uint64_t seed) {
  LearnerSpec s;
  s.kind = LearnerKind::kBaggedTrees;
  s.trees = trees;
  s.max_depth = depth;
  s.seed = seed;
  return s;
}

// Two leaves of a single attribute with opposite-sign linear separators in 2-D.
inline PlantedModel opposite_separators(std::size_t per_leaf, double noise) {
  PlantedModel m;
  m.attributes = {"leaf"};
  m.dim = 2;
  m.noise = noise;
  PlantedLeaf a{{{"leaf", "A"}}, per_leaf, {LeafRule::Kind::kLinear, 0, {1.0, 1.0}, 0.0}};
  PlantedLeaf b{{{"leaf", "B"}}, per_leaf, {LeafRule::Kind::kLinear, 0, {-1.0, -1.0}, 0.0}};
  m.leaves = {a, b};
  return m;
}

// Full attribute product with `cats[k]` categories for attribute k; every
// leaf gets a random constant or linear rule.
inline PlantedModel random_product_model(std::mt19937_64& rng, const std::vector<int>& cats, std::size_t rows,
                                         double noise, std::size_t dim = 2) {
  PlantedModel m;
  m.dim = dim;
  m.noise = noise;
  for (std::size_t k = 0; k < cats.size(); ++k) m.attributes.push_back("a" + std::to_string(k));
  std::size_t leaves = 1;
  for (int c : cats) leaves *= static_cast<std::size_t>(c);
  // Uneven leaf sizes so that some groups are small.
  std::vector<double> weight(leaves);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  double total = 0.0;
  for (auto& w : weight) total += (w = u(rng) * u(rng));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < leaves; ++i) {
    PlantedLeaf leaf;
    std::size_t rest = i;
    for (std::size_t k = cats.size(); k-- > 0;) {
      const auto c = static_cast<std::size_t>(cats[k]);
      leaf.groups.insert(leaf.groups.begin(), {m.attributes[k], "c" + std::to_string(rest % c)});
      rest /= c;
    }
    leaf.count = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(rows) * weight[i] / total));
    if (coin(rng)) {
      leaf.rule.kind = LeafRule::Kind::kConstant;
      leaf.rule.label = coin(rng) ? 1 : 0;
    } else {
      leaf.rule.kind = LeafRule::Kind::kLinear;
      for (std::size_t d = 0; d < dim; ++d) leaf.rule.weights.push_back(gauss(rng));
      leaf.rule.bias = 0.3 * gauss(rng);
    }
    m.leaves.push_back(std::move(leaf));
  }
  return m;
}

inline std::shared_ptr<const GroupTree> product_tree(const Dataset& data, const std::vector<std::string>& order) {
  return std::make_shared<const GroupTree>(build_hierarchy(data, order));
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mgl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace mgl::testutil
