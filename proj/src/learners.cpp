#include "mgl/learners.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <set>

#include "mgl/error.hpp"

namespace mgl {

namespace {

LearnerKind learner_kind_from_string(std::string_view s) {
  if (s == "constant") return LearnerKind::kConstant;
  if (s == "logistic") return LearnerKind::kLogistic;
  if (s == "tree") return LearnerKind::kTree;
  if (s == "bagged_trees") return LearnerKind::kBaggedTrees;
  throw ConfigError("unknown learner kind '" + std::string(s) + "'");
}

std::string_view to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::kConstant: return "constant";
    case LearnerKind::kLogistic: return "logistic";
    case LearnerKind::kTree: return "tree";
    case LearnerKind::kBaggedTrees: return "bagged_trees";
  }
  return "constant";
}

double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

double softplus(double m) { return std::max(m, 0.0) + std::log1p(std::exp(-std::abs(m))); }

std::size_t count_positive(const Dataset& ds, std::span<const uint32_t> rows) {
  std::size_t p = 0;
  for (uint32_t r : rows) p += ds.label(r);
  return p;
}

std::shared_ptr<Predictor> fit_logistic(const LearnerSpec& spec, const Dataset& ds,
                                        std::span<const uint32_t> rows) {
  const std::size_t d = ds.num_features();
  const std::size_t m = rows.size();
  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  for (uint32_t r : rows) {
    const auto x = ds.features(r);
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[j];
  }
  for (auto& v : mean) v /= static_cast<double>(m);
  std::vector<double> var(d, 0.0);
  for (uint32_t r : rows) {
    const auto x = ds.features(r);
    for (std::size_t j = 0; j < d; ++j) var[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(m));
    scale[j] = sd > 0.0 ? sd : 1.0;
  }
  std::vector<double> z(m * d);
  std::vector<uint8_t> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = ds.features(rows[i]);
    for (std::size_t j = 0; j < d; ++j) z[i * d + j] = (x[j] - mean[j]) / scale[j];
    y[i] = ds.label(rows[i]);
  }

  // Full-batch gradient descent with Armijo backtracking on the step size.
  std::vector<double> params(d + 1, 0.0), grad, trial(d + 1), trial_grad;
  double f = detail::logistic_objective(z, d, y, params, &grad);
  double step = spec.learning_rate;
  for (int it = 0; it < spec.max_iter; ++it) {
    double g2 = 0.0;
    for (double g : grad) g2 += g * g;
    if (std::sqrt(g2) < spec.tolerance) break;
    bool accepted = false;
    while (step > 1e-12) {
      for (std::size_t k = 0; k <= d; ++k) trial[k] = params[k] - step * grad[k];
      const double f_new = detail::logistic_objective(z, d, y, trial, &trial_grad);
      if (f_new <= f - 0.5 * step * g2) {
        params.swap(trial);
        grad.swap(trial_grad);
        f = f_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step = std::min(step * 2.0, 1e6);
  }
  std::vector<double> w(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
  return std::make_shared<LogisticPredictor>(std::move(mean), std::move(scale), std::move(w), params[d]);
}

// Greedy top-down tree growth maximizing entropy reduction.
class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, int max_depth, int max_features, std::mt19937_64* rng)
      : ds_(ds), max_depth_(max_depth), max_features_(max_features), rng_(rng) {}

  std::vector<TreeNode> build(std::vector<uint32_t> rows) {
    nodes_.clear();
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<uint32_t> rows, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const double n = static_cast<double>(rows.size());
    const double pos = static_cast<double>(count_positive(ds_, rows));
    nodes_[static_cast<std::size_t>(index)].positive_rate = pos / n;
    if (depth >= max_depth_ || pos == 0.0 || pos == n || rows.size() < 2) return index;

    const double parent_h = detail::binary_entropy(pos, n);
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, uint8_t>> column(rows.size());
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        column[i] = {ds_.features(rows[i])[f], ds_.label(rows[i])};
      }
      std::sort(column.begin(), column.end());
      double left_pos = 0.0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        left_pos += column[i].second;
        const double a = column[i].first, b = column[i + 1].first;
        if (!(a < b)) continue;
        const double nl = static_cast<double>(i + 1), nr = n - nl;
        const double gain = parent_h - (nl / n) * detail::binary_entropy(left_pos, nl) -
                            (nr / n) * detail::binary_entropy(pos - left_pos, nr);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          double mid = a + (b - a) / 2.0;
          best_threshold = mid < b ? mid : a;
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<uint32_t> left, right;
    for (uint32_t r : rows) {
      (ds_.features(r)[static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = ds_.num_features();
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (rng_ == nullptr) return all;
    std::size_t k = max_features_ > 0 ? static_cast<std::size_t>(max_features_)
                                      : static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d))));
    k = std::clamp<std::size_t>(k, 1, std::max<std::size_t>(d, 1));
    for (std::size_t i = 0; i < k && i < d; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, d - 1);
      std::swap(all[i], all[pick(*rng_)]);
    }
    all.resize(std::min(k, d));
    std::sort(all.begin(), all.end());
    return all;
  }

  const Dataset& ds_;
  int max_depth_;
  int max_features_;
  std::mt19937_64* rng_;
  std::vector<TreeNode> nodes_;
};

std::shared_ptr<Predictor> fit_impl(const LearnerSpec& spec, const Dataset& ds,
                                    std::span<const uint32_t> rows) {
  spec.validate();
  if (rows.empty()) throw EmptyGroupError("empty training group");
  if (ds.num_features() == 0) throw SchemaError("no feature columns to train on");
  const std::size_t pos = count_positive(ds, rows);
  const double rate = static_cast<double>(pos) / static_cast<double>(rows.size());
  if (spec.kind == LearnerKind::kConstant || pos == 0 || pos == rows.size()) {
    return std::make_shared<ConstantPredictor>(rate);
  }
  switch (spec.kind) {
    case LearnerKind::kLogistic:
      return fit_logistic(spec, ds, rows);
    case LearnerKind::kTree: {
      TreeBuilder builder(ds, spec.max_depth, 0, nullptr);
      return std::make_shared<DecisionTreePredictor>(builder.build({rows.begin(), rows.end()}));
    }
    case LearnerKind::kBaggedTrees: {
      std::vector<DecisionTreePredictor> trees;
      for (int t = 0; t < spec.trees; ++t) {
        std::mt19937_64 rng(mix_seed(spec.seed, static_cast<uint64_t>(t)));
        std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
        std::vector<uint32_t> sample(rows.size());
        for (auto& s : sample) s = rows[pick(rng)];
        TreeBuilder builder(ds, spec.max_depth, spec.max_features, &rng);
        trees.emplace_back(builder.build(std::move(sample)));
      }
      return std::make_shared<BaggedTreesPredictor>(std::move(trees));
    }
    case LearnerKind::kConstant:
      break;
  }
  return std::make_shared<ConstantPredictor>(rate);
}

DecisionTreePredictor tree_from_json(const json& doc) {
  std::vector<TreeNode> nodes;
  for (const auto& n : doc.at("nodes")) {
    nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                     n.at(4).get<double>()});
  }
  return DecisionTreePredictor(std::move(nodes));
}

}  // namespace

std::string LearnerSpec::name() const {
  switch (kind) {
    case LearnerKind::kConstant: return "constant";
    case LearnerKind::kLogistic: return "logistic";
    case LearnerKind::kTree: return "tree" + std::to_string(max_depth);
    case LearnerKind::kBaggedTrees: return "bagged" + std::to_string(trees);
  }
  return "constant";
}

void LearnerSpec::validate() const {
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (max_iter < 1) throw ConfigError("iterations must be >= 1");
  if (trees < 1) throw ConfigError("bagged trees must be >= 1");
  if (max_features < 0) throw ConfigError("max_features must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be >= 0");
}

LearnerSpec LearnerSpec::from_json(const json& doc) {
  static const std::set<std::string> kKeys = {"kind",          "max_depth", "trees",     "max_features",
                                              "learning_rate", "max_iter",  "tolerance", "seed"};
  if (!doc.is_object()) throw ConfigError("learner spec must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown learner key '" + key + "'");
  }
  LearnerSpec s;
  try {
    s.kind = learner_kind_from_string(doc.at("kind").get<std::string>());
    s.max_depth = doc.value("max_depth", s.kind == LearnerKind::kBaggedTrees ? 8 : s.max_depth);
    s.trees = doc.value("trees", s.trees);
    s.max_features = doc.value("max_features", s.max_features);
    s.learning_rate = doc.value("learning_rate", s.learning_rate);
    s.max_iter = doc.value("max_iter", s.max_iter);
    s.tolerance = doc.value("tolerance", s.tolerance);
    s.seed = doc.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed learner spec: ") + e.what());
  }
  s.validate();
  return s;
}

json LearnerSpec::to_json() const {
  json doc = {{"kind", std::string(to_string(kind))}};
  switch (kind) {
    case LearnerKind::kConstant:
      break;
    case LearnerKind::kLogistic:
      doc["learning_rate"] = learning_rate;
      doc["max_iter"] = max_iter;
      doc["tolerance"] = tolerance;
      break;
    case LearnerKind::kTree:
      doc["max_depth"] = max_depth;
      break;
    case LearnerKind::kBaggedTrees:
      doc["max_depth"] = max_depth;
      doc["trees"] = trees;
      doc["max_features"] = max_features;
      doc["seed"] = seed;
      break;
  }
  return doc;
}

json ConstantPredictor::to_json() const {
  return {{"type", "constant"}, {"positive_rate", rate_}, {"provenance", provenance_json()}};
}

LogisticPredictor::LogisticPredictor(std::vector<double> mean, std::vector<double> scale,
                                     std::vector<double> weights, double intercept)
    : mean_(std::move(mean)), scale_(std::move(scale)), weights_(std::move(weights)), intercept_(intercept) {}

double LogisticPredictor::margin(const ExampleView& x) const {
  double m = intercept_;
  for (std::size_t j = 0; j < weights_.size(); ++j) m += weights_[j] * ((x.features[j] - mean_[j]) / scale_[j]);
  return m;
}

double LogisticPredictor::score(const ExampleView& x) const { return sigmoid(margin(x)); }

json LogisticPredictor::to_json() const {
  return {{"type", "logistic"}, {"mean", mean_},           {"scale", scale_},
          {"weights", weights_}, {"intercept", intercept_}, {"provenance", provenance_json()}};
}

double DecisionTreePredictor::score(const ExampleView& x) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x.features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].positive_rate;
}

int DecisionTreePredictor::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  // Children always follow their parent in `nodes_`.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

json DecisionTreePredictor::to_json() const {
  json nodes = json::array();
  for (const auto& n : nodes_) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.positive_rate});
  return {{"type", "tree"}, {"nodes", nodes}, {"provenance", provenance_json()}};
}

double BaggedTreesPredictor::score(const ExampleView& x) const {
  std::size_t votes = 0;
  for (const auto& t : trees_) votes += static_cast<std::size_t>(t.predict(x));
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

json BaggedTreesPredictor::to_json() const {
  json trees = json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json().at("nodes"));
  json doc = {{"type", "bagged_trees"}, {"trees", json::array()}, {"provenance", provenance_json()}};
  for (auto& t : trees) doc["trees"].push_back({{"nodes", std::move(t)}});
  return doc;
}

PredictorPtr fit_rows(const LearnerSpec& spec, const Dataset& ds, std::span<const uint32_t> rows) {
  auto p = fit_impl(spec, ds, rows);
  p->set_provenance({spec.name(), ""});
  return p;
}

PredictorPtr fit(const LearnerSpec& spec, const Dataset& ds, std::span<const uint8_t> mask) {
  if (mask.size() != ds.size()) throw ValueError("mask length does not match dataset size");
  std::vector<uint32_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(static_cast<uint32_t>(i));
  }
  return fit_rows(spec, ds, rows);
}

PredictorPtr erm(const LearnerSpec& spec, const Dataset& ds) {
  std::vector<uint32_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), uint32_t{0});
  auto p = fit_impl(spec, ds, rows);
  p->set_provenance({spec.name(), std::string(kRootId)});
  return p;
}

PredictorPtr group_erm(const LearnerSpec& spec, const Dataset& ds, const Group& g) {
  const auto mask = membership_vector(g, ds);
  std::vector<uint32_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(static_cast<uint32_t>(i));
  }
  if (rows.empty()) throw EmptyGroupError("empty group '" + g.id + "'");
  auto p = fit_impl(spec, ds, rows);
  p->set_provenance({spec.name(), g.id});
  return p;
}

PredictorPtr predictor_from_json(const json& doc) {
  std::shared_ptr<Predictor> p;
  try {
    const auto type = doc.at("type").get<std::string>();
    if (type == "constant") {
      p = std::make_shared<ConstantPredictor>(doc.at("positive_rate").get<double>());
    } else if (type == "logistic") {
      p = std::make_shared<LogisticPredictor>(
          doc.at("mean").get<std::vector<double>>(), doc.at("scale").get<std::vector<double>>(),
          doc.at("weights").get<std::vector<double>>(), doc.at("intercept").get<double>());
    } else if (type == "tree") {
      p = std::make_shared<DecisionTreePredictor>(tree_from_json(doc));
    } else if (type == "bagged_trees") {
      std::vector<DecisionTreePredictor> trees;
      for (const auto& t : doc.at("trees")) trees.push_back(tree_from_json(t));
      p = std::make_shared<BaggedTreesPredictor>(std::move(trees));
    } else {
      throw ValueError("unknown predictor type '" + type + "'");
    }
    if (doc.contains("provenance")) {
      const auto& pr = doc.at("provenance");
      p->set_provenance({pr.value("learner", ""), pr.value("group", "")});
    }
  } catch (const json::exception& e) {
    throw ValueError(std::string("malformed predictor: ") + e.what());
  }
  return p;
}

GroupErmCache::GroupErmCache(LearnerSpec spec, const Dataset& train, std::shared_ptr<const GroupTree> tree)
    : spec_(std::move(spec)), train_(&train), tree_(std::move(tree)) {
  spec_.validate();
  rows_ = node_rows(*tree_, train);
  fits_.assign(tree_->size(), nullptr);
  std::exception_ptr failure;
  const auto n_nodes = static_cast<std::ptrdiff_t>(tree_->size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n_nodes; ++i) {
    const auto node = static_cast<std::size_t>(i);
    if (rows_[node].empty()) continue;
    try {
      auto p = fit_impl(spec_, train, rows_[node]);
      p->set_provenance({spec_.name(), tree_->group(node).id});
      fits_[node] = std::move(p);
    } catch (...) {
#pragma omp critical(mgl_cache_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

double logistic_objective(std::span<const double> z, std::size_t dim, std::span<const uint8_t> labels,
                          std::span<const double> params, std::vector<double>* gradient) {
  const std::size_t m = labels.size();
  double total = 0.0;
  if (gradient) gradient->assign(dim + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = z.data() + i * dim;
    double margin = params[dim];
    for (std::size_t j = 0; j < dim; ++j) margin += params[j] * row[j];
    const double y = labels[i];
    total += softplus(margin) - y * margin;
    if (gradient) {
      const double r = sigmoid(margin) - y;
      for (std::size_t j = 0; j < dim; ++j) (*gradient)[j] += r * row[j];
      (*gradient)[dim] += r;
    }
  }
  const double inv = 1.0 / static_cast<double>(m);
  if (gradient) {
    for (auto& g : *gradient) g *= inv;
  }
  return total * inv;
}

double binary_entropy(double positives, double total) {
  if (total <= 0.0) return 0.0;
  const double p = positives / total;
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

}  // namespace detail

}  // namespace mgl
