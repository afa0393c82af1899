#include "mgl/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "mgl/kernels.hpp"

namespace mgl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from_json(const json& v) {
  if (v.is_number()) return v.get<double>();
  const auto s = v.get<std::string>();
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw ValueError("expected a number, got '" + s + "'");
}

json optional_json(const std::optional<double>& v) { return v ? number_json(*v) : json(nullptr); }

std::optional<double> optional_from_json(const json& v) {
  if (v.is_null()) return std::nullopt;
  return number_from_json(v);
}

double risk_or_throw(const Predictor& f, const Dataset& ds, std::span<const uint32_t> rows, const Loss& loss) {
  return *rows_risk(f, ds, rows, loss).value;
}

// Mean of per-row values over `rows`, summed the same way as rows_risk.
double gathered_mean(const std::vector<double>& per_row, std::span<const uint32_t> rows) {
  std::vector<double> values(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) values[i] = per_row[rows[i]];
  return kernels::serial::sum(values) / static_cast<double>(rows.size());
}

void assign_losses(std::vector<double>& per_row, const Predictor& h, const Dataset& ds,
                   std::span<const uint32_t> rows, const Loss& loss) {
  for (uint32_t r : rows) per_row[r] = loss.evaluate(h, ds.example(r), ds.label(r));
}

std::size_t node_of(const GroupTree& tree, const std::string& id) {
  const auto found = tree.find(id);
  if (!found) throw MismatchError("group '" + id + "' is not in the hierarchy");
  return *found;
}

bool is_ancestor(const GroupTree& tree, std::size_t a, std::size_t node) {
  for (int p = tree.parent(node); p >= 0; p = tree.parent(static_cast<std::size_t>(p))) {
    if (static_cast<std::size_t>(p) == a) return true;
  }
  return false;
}

EpsilonSpec resolve(const EpsilonSpec& eps, const GroupErmCache& cache) {
  EpsilonSpec e = eps.resolved(cache.tree().size(), cache.data().size());
  e.validate();
  return e;
}

}  // namespace

std::string_view to_string(NodeDecision d) {
  switch (d) {
    case NodeDecision::kRoot: return "root";
    case NodeDecision::kUpdated: return "updated";
    case NodeDecision::kInherited: return "inherited";
    case NodeDecision::kEmpty: return "inherited_empty";
  }
  return "inherited";
}

NodeDecision node_decision_from_string(std::string_view s) {
  if (s == "root") return NodeDecision::kRoot;
  if (s == "updated") return NodeDecision::kUpdated;
  if (s == "inherited") return NodeDecision::kInherited;
  if (s == "inherited_empty") return NodeDecision::kEmpty;
  throw ValueError("unknown node decision '" + std::string(s) + "'");
}

json TraceEntry::to_json() const {
  return {{"step", step},
          {"node", node},
          {"group", group_id},
          {"parent", parent_id.empty() ? json(nullptr) : json(parent_id)},
          {"depth", depth},
          {"n_g", n_g},
          {"risk_parent", optional_json(risk_parent)},
          {"risk_group_erm", optional_json(risk_group_erm)},
          {"epsilon", number_json(epsilon)},
          {"err", optional_json(err)},
          {"decision", std::string(to_string(decision))}};
}

TraceEntry TraceEntry::from_json(const json& doc) {
  TraceEntry e;
  try {
    e.step = doc.at("step").get<std::size_t>();
    e.node = doc.at("node").get<std::size_t>();
    e.group_id = doc.at("group").get<std::string>();
    e.parent_id = doc.at("parent").is_null() ? "" : doc.at("parent").get<std::string>();
    e.depth = doc.at("depth").get<std::size_t>();
    e.n_g = doc.at("n_g").get<std::size_t>();
    e.risk_parent = optional_from_json(doc.at("risk_parent"));
    e.risk_group_erm = optional_from_json(doc.at("risk_group_erm"));
    e.epsilon = number_from_json(doc.at("epsilon"));
    e.err = optional_from_json(doc.at("err"));
    e.decision = node_decision_from_string(doc.at("decision").get<std::string>());
  } catch (const json::exception& ex) {
    throw ValueError(std::string("malformed trace entry: ") + ex.what());
  }
  return e;
}

std::string trace_to_jsonl(std::span<const TraceEntry> trace) {
  std::string out;
  for (const auto& e : trace) out += e.to_json().dump() + "\n";
  return out;
}

std::vector<TraceEntry> trace_from_jsonl(const std::string& text) {
  std::vector<TraceEntry> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(TraceEntry::from_json(json::parse(line)));
    } catch (const json::exception& ex) {
      throw ValueError("trace line " + std::to_string(out.size() + 1) + ": " + ex.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// MGL-Tree

TreePredictor::TreePredictor(std::shared_ptr<const GroupTree> tree, std::vector<PredictorPtr> working,
                             std::vector<std::size_t> source, std::vector<TraceEntry> trace)
    : tree_(std::move(tree)), working_(std::move(working)), source_(std::move(source)), trace_(std::move(trace)) {}

double TreePredictor::score(const ExampleView& x) const { return working_[tree_->deepest_containing(x)]->score(x); }

int TreePredictor::predict(const ExampleView& x) const {
  return working_[tree_->deepest_containing(x)]->predict(x);
}

json TreePredictor::to_json() const {
  json nodes = json::array();
  for (std::size_t i = 0; i < tree_->size(); ++i) {
    json node = trace_[i].to_json();
    node["source"] = tree_->group(source_[i]).id;
    const auto d = trace_[i].decision;
    if (d == NodeDecision::kRoot || d == NodeDecision::kUpdated) node["predictor"] = working_[i]->to_json();
    nodes.push_back(std::move(node));
  }
  return {{"type", "mgl_tree"}, {"nodes", nodes}};
}

TreePredictor TreePredictor::from_json(const json& doc, std::shared_ptr<const GroupTree> tree) {
  try {
    if (doc.at("type") != "mgl_tree") throw ValueError("not an mgl_tree model");
    const auto& nodes = doc.at("nodes");
    if (nodes.size() != tree->size()) {
      throw MismatchError("model has " + std::to_string(nodes.size()) + " nodes, hierarchy has " +
                          std::to_string(tree->size()));
    }
    std::vector<PredictorPtr> working(tree->size());
    std::vector<std::size_t> source(tree->size());
    std::vector<TraceEntry> trace;
    for (std::size_t i = 0; i < tree->size(); ++i) {
      const auto& n = nodes.at(i);
      trace.push_back(TraceEntry::from_json(n));
      if (trace.back().group_id != tree->group(i).id) {
        throw MismatchError("model node " + std::to_string(i) + " is '" + trace.back().group_id +
                            "', hierarchy has '" + tree->group(i).id + "'");
      }
      source[i] = node_of(*tree, n.at("source").get<std::string>());
      if (n.contains("predictor")) {
        working[i] = predictor_from_json(n.at("predictor"));
      } else if (i == 0) {
        throw ValueError("root node has no predictor");
      } else {
        working[i] = working[static_cast<std::size_t>(tree->parent(i))];
      }
    }
    return TreePredictor(std::move(tree), std::move(working), std::move(source), std::move(trace));
  } catch (const json::exception& e) {
    throw ValueError(std::string("malformed mgl_tree model: ") + e.what());
  }
}

TreePredictor mgl_tree(const GroupErmCache& cache, const EpsilonSpec& eps, const Loss& loss) {
  const GroupTree& tree = cache.tree();
  const Dataset& train = cache.data();
  if (train.empty()) throw ValueError("empty training set");
  const EpsilonSpec e = resolve(eps, cache);
  const std::size_t n = tree.size();

  std::vector<PredictorPtr> working(n);
  std::vector<std::size_t> source(n, 0);
  std::vector<TraceEntry> trace(n);
  for (std::size_t node = 0; node < n; ++node) {
    TraceEntry& t = trace[node];
    t.step = node;
    t.node = node;
    t.group_id = tree.group(node).id;
    t.depth = tree.depth(node);
    t.n_g = cache.count(node);
    t.epsilon = epsilon(e, t.n_g);
    if (t.n_g > 0) t.risk_group_erm = risk_or_throw(*cache.predictor(node), train, cache.rows(node), loss);
    if (node == 0) {
      working[0] = cache.erm();
      t.decision = NodeDecision::kRoot;
      continue;
    }
    const auto parent = static_cast<std::size_t>(tree.parent(node));
    t.parent_id = tree.group(parent).id;
    if (t.n_g == 0) {
      working[node] = working[parent];
      source[node] = source[parent];
      t.decision = NodeDecision::kEmpty;
      continue;
    }
    t.risk_parent = risk_or_throw(*working[parent], train, cache.rows(node), loss);
    t.err = *t.risk_parent - *t.risk_group_erm - t.epsilon;
    if (*t.err >= 0.0) {
      working[node] = cache.predictor(node);
      source[node] = node;
      t.decision = NodeDecision::kUpdated;
    } else {
      working[node] = working[parent];
      source[node] = source[parent];
      t.decision = NodeDecision::kInherited;
    }
  }
  return TreePredictor(cache.tree_ptr(), std::move(working), std::move(source), std::move(trace));
}

TreePredictor mgl_tree(const Dataset& train, std::shared_ptr<const GroupTree> tree, const LearnerSpec& spec,
                       const EpsilonSpec& eps, const Loss& loss) {
  if (train.empty()) throw ValueError("empty training set");
  const GroupErmCache cache(spec, train, std::move(tree));
  return mgl_tree(cache, eps, loss);
}

// ---------------------------------------------------------------------------
// Prepend

DecisionList::DecisionList(std::shared_ptr<const GroupTree> tree, PredictorPtr default_predictor)
    : tree_(std::move(tree)), default_(std::move(default_predictor)) {}

const Predictor& DecisionList::handler(const ExampleView& x) const {
  for (const auto& e : entries_) {
    if (tree_->contains(e.node, x.categories)) return *e.predictor;
  }
  return *default_;
}

json DecisionList::to_json() const {
  json entries = json::array();
  for (const auto& e : entries_) {
    entries.push_back({{"group", tree_->group(e.node).id},
                       {"hypothesis", tree_->group(e.hypothesis).id},
                       {"violation", number_json(e.violation)},
                       {"predictor", e.predictor->to_json()}});
  }
  return {{"type", "decision_list"}, {"entries", entries}, {"default", default_->to_json()}};
}

DecisionList DecisionList::from_json(const json& doc, std::shared_ptr<const GroupTree> tree) {
  try {
    if (doc.at("type") != "decision_list") throw ValueError("not a decision_list model");
    DecisionList list(tree, predictor_from_json(doc.at("default")));
    for (const auto& e : doc.at("entries")) {
      list.entries_.push_back({node_of(*tree, e.at("group").get<std::string>()),
                               node_of(*tree, e.at("hypothesis").get<std::string>()),
                               predictor_from_json(e.at("predictor")), number_from_json(e.at("violation"))});
    }
    return list;
  } catch (const json::exception& e) {
    throw ValueError(std::string("malformed decision_list model: ") + e.what());
  }
}

namespace {

// L_S(h | g) for every candidate h (rows) and every group g with data (columns).
std::vector<std::vector<double>> candidate_risks(const GroupErmCache& cache, std::span<const std::size_t> observed,
                                                 const Loss& loss) {
  std::vector<std::vector<double>> risks(observed.size(), std::vector<double>(cache.tree().size(), 0.0));
  std::exception_ptr failure;
  const auto k = static_cast<std::ptrdiff_t>(observed.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < k; ++c) {
    try {
      const Predictor& h = *cache.predictor(observed[static_cast<std::size_t>(c)]);
      for (std::size_t g : observed) {
        risks[static_cast<std::size_t>(c)][g] = risk_or_throw(h, cache.data(), cache.rows(g), loss);
      }
    } catch (...) {
#pragma omp critical(mgl_prepend_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return risks;
}

}  // namespace

DecisionList prepend(const GroupErmCache& cache, const EpsilonSpec& eps, const Loss& loss, std::size_t cap) {
  const GroupTree& tree = cache.tree();
  const Dataset& train = cache.data();
  if (train.empty()) throw ValueError("empty training set");
  const EpsilonSpec e = resolve(eps, cache);
  if (cap == 0) cap = 4 * tree.size();

  std::vector<std::size_t> observed;
  for (std::size_t g = 0; g < tree.size(); ++g) {
    if (cache.count(g) > 0) observed.push_back(g);
  }
  const auto risks = candidate_risks(cache, observed, loss);
  std::vector<double> eps_g(tree.size(), kInf);
  for (std::size_t g : observed) eps_g[g] = epsilon(e, cache.count(g));

  auto list = std::make_shared<DecisionList>(cache.tree_ptr(), cache.erm());
  std::vector<double> per_row(train.size());
  assign_losses(per_row, *cache.erm(), train, cache.rows(0), loss);
  std::vector<double> current(tree.size(), 0.0);
  for (std::size_t g : observed) current[g] = gathered_mean(per_row, cache.rows(g));

  for (;;) {
    double best = -kInf;
    std::size_t best_g = 0, best_c = 0;
    for (std::size_t g : observed) {
      for (std::size_t c = 0; c < observed.size(); ++c) {
        const double v = current[g] - risks[c][g] - eps_g[g];
        if (v > best) {
          best = v;
          best_g = g;
          best_c = c;
        }
      }
    }
    if (!(best >= 0.0)) break;
    if (list->size() >= cap) {
      throw PrependCapError("prepend did not terminate within cap (" + std::to_string(cap) + " entries)", list);
    }
    const std::size_t h = observed[best_c];
    list->prepend({best_g, h, cache.predictor(h), best});
    assign_losses(per_row, *cache.predictor(h), train, cache.rows(best_g), loss);
    for (std::size_t g : observed) {
      if (g == best_g || is_ancestor(tree, g, best_g) || is_ancestor(tree, best_g, g)) {
        current[g] = gathered_mean(per_row, cache.rows(g));
      }
    }
  }
  return std::move(*list);
}

std::vector<PrependViolation> prepend_violations(const Predictor& f, const GroupErmCache& cache,
                                                 const EpsilonSpec& eps, const Loss& loss) {
  const EpsilonSpec e = resolve(eps, cache);
  const GroupTree& tree = cache.tree();
  std::vector<std::size_t> observed;
  for (std::size_t g = 0; g < tree.size(); ++g) {
    if (cache.count(g) > 0) observed.push_back(g);
  }
  const auto risks = candidate_risks(cache, observed, loss);
  std::vector<PrependViolation> out;
  for (std::size_t g : observed) {
    const double lf = risk_or_throw(f, cache.data(), cache.rows(g), loss);
    const double eg = epsilon(e, cache.count(g));
    for (std::size_t c = 0; c < observed.size(); ++c) {
      const double v = lf - risks[c][g] - eg;
      if (v >= 0.0) out.push_back({tree.group(g).id, tree.group(observed[c]).id, v});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decoupled

PartitionPredictor::PartitionPredictor(std::shared_ptr<const GroupTree> tree, std::vector<PredictorPtr> leaf,
                                       PredictorPtr root, Fallback fallback)
    : tree_(std::move(tree)), leaf_(std::move(leaf)), root_(std::move(root)), fallback_(fallback) {}

const Predictor& PartitionPredictor::handler(const ExampleView& x) const {
  const std::size_t node = tree_->deepest_containing(x);
  if (tree_->is_leaf(node)) return *leaf_[node];
  if (fallback_ == Fallback::kRoot) return *root_;
  throw RoutingError("no leaf group contains example (" + tree_->describe(x.categories) + ")");
}

json PartitionPredictor::to_json() const {
  json leaves = json::array();
  for (std::size_t i = 0; i < tree_->size(); ++i) {
    if (!tree_->is_leaf(i)) continue;
    const bool from_root = leaf_[i] == root_ && i != 0;
    leaves.push_back({{"group", tree_->group(i).id},
                      {"source", from_root ? "root" : "group"},
                      {"predictor", leaf_[i]->to_json()}});
  }
  return {{"type", "decoupled"},
          {"fallback", fallback_ == Fallback::kRoot ? "root" : "error"},
          {"leaves", leaves},
          {"root", root_->to_json()}};
}

PartitionPredictor PartitionPredictor::from_json(const json& doc, std::shared_ptr<const GroupTree> tree) {
  try {
    if (doc.at("type") != "decoupled") throw ValueError("not a decoupled model");
    const auto fb = doc.at("fallback").get<std::string>();
    const Fallback fallback = fb == "error" ? Fallback::kError : Fallback::kRoot;
    PredictorPtr root = predictor_from_json(doc.at("root"));
    std::vector<PredictorPtr> leaf(tree->size());
    for (const auto& l : doc.at("leaves")) {
      const std::size_t node = node_of(*tree, l.at("group").get<std::string>());
      leaf[node] = l.at("source") == "root" ? root : predictor_from_json(l.at("predictor"));
    }
    for (std::size_t i = 0; i < tree->size(); ++i) {
      if (tree->is_leaf(i) && !leaf[i]) throw MismatchError("model lacks leaf '" + tree->group(i).id + "'");
    }
    return PartitionPredictor(std::move(tree), std::move(leaf), std::move(root), fallback);
  } catch (const json::exception& e) {
    throw ValueError(std::string("malformed decoupled model: ") + e.what());
  }
}

PartitionPredictor decoupled(const GroupErmCache& cache, Fallback fallback) {
  const GroupTree& tree = cache.tree();
  if (cache.data().empty()) throw ValueError("empty training set");
  std::vector<PredictorPtr> leaf(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (!tree.is_leaf(i)) continue;
    leaf[i] = cache.predictor(i) ? cache.predictor(i) : cache.erm();
  }
  return PartitionPredictor(cache.tree_ptr(), std::move(leaf), cache.erm(), fallback);
}

// ---------------------------------------------------------------------------
// Audit

json AuditVerdict::to_json() const {
  json v = json::array();
  for (const auto& a : violations) {
    v.push_back({{"step", a.step},
                 {"group", a.group_id},
                 {"kind", a.kind},
                 {"lhs", number_json(a.lhs)},
                 {"rhs", number_json(a.rhs)}});
  }
  return {{"clean", clean()}, {"steps", steps}, {"violations", v}};
}

AuditVerdict monotonicity_audit(std::span<const TraceEntry> trace, const GroupErmCache& cache,
                                const EpsilonSpec& eps, const Loss& loss) {
  const GroupTree& tree = cache.tree();
  const Dataset& train = cache.data();
  if (trace.size() != tree.size()) {
    throw MismatchError("trace has " + std::to_string(trace.size()) + " steps, hierarchy has " +
                        std::to_string(tree.size()) + " nodes");
  }
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].node != i || trace[i].group_id != tree.group(i).id || trace[i].n_g != cache.count(i)) {
      throw MismatchError("trace step " + std::to_string(i) + " ('" + trace[i].group_id +
                          "') does not match the hierarchy and training data");
    }
  }
  if (train.empty()) throw ValueError("empty training set");
  const EpsilonSpec e = resolve(eps, cache);

  AuditVerdict verdict;
  verdict.steps = trace.size();
  std::vector<double> per_row(train.size());
  assign_losses(per_row, *cache.erm(), train, cache.rows(0), loss);
  std::vector<double> h_risk(tree.size(), 0.0), eps_g(tree.size(), kInf);
  for (std::size_t g = 0; g < tree.size(); ++g) {
    if (cache.count(g) == 0) continue;
    h_risk[g] = risk_or_throw(*cache.predictor(g), train, cache.rows(g), loss);
    eps_g[g] = epsilon(e, cache.count(g));
  }
  auto check = [&](std::size_t step, std::size_t g) {
    const double lhs = gathered_mean(per_row, cache.rows(g));
    const double rhs = h_risk[g] + eps_g[g];
    if (lhs > rhs + kAuditTolerance) verdict.violations.push_back({step, tree.group(g).id, "inequality", lhs, rhs});
  };

  if (trace[0].decision != NodeDecision::kRoot) {
    verdict.violations.push_back({0, tree.group(0).id, "rule disagreement", 0.0, 0.0});
  }
  check(0, 0);
  for (std::size_t node = 1; node < tree.size(); ++node) {
    const NodeDecision recorded = trace[node].decision;
    if (cache.count(node) == 0) {
      if (recorded != NodeDecision::kEmpty) {
        verdict.violations.push_back({node, tree.group(node).id, "rule disagreement", 0.0, 0.0});
      }
      continue;
    }
    // Before the visit, f on g is the parent's working predictor.
    const double risk_parent = gathered_mean(per_row, cache.rows(node));
    const double err = risk_parent - h_risk[node] - eps_g[node];
    const NodeDecision rule = err >= 0.0 ? NodeDecision::kUpdated : NodeDecision::kInherited;
    if (recorded != rule) verdict.violations.push_back({node, tree.group(node).id, "rule disagreement", err, 0.0});
    if (recorded != NodeDecision::kUpdated) {
      check(node, node);
      continue;
    }
    std::vector<std::pair<std::size_t, double>> before;
    for (int a = tree.parent(node); a >= 0; a = tree.parent(static_cast<std::size_t>(a))) {
      const auto anc = static_cast<std::size_t>(a);
      before.emplace_back(anc, gathered_mean(per_row, cache.rows(anc)));
    }
    assign_losses(per_row, *cache.predictor(node), train, cache.rows(node), loss);
    // Visited groups other than `node` and its ancestors are disjoint from it
    // and keep their risk.
    check(node, node);
    for (const auto& [anc, old] : before) {
      const double now = gathered_mean(per_row, cache.rows(anc));
      if (now > old + kAuditTolerance) {
        verdict.violations.push_back({node, tree.group(anc).id, "monotonicity", now, old});
      }
      check(node, anc);
    }
  }
  return verdict;
}

std::vector<AuditViolation> multigroup_violations(const Predictor& f, const GroupErmCache& cache,
                                                  const EpsilonSpec& eps, const Loss& loss, double tolerance) {
  const EpsilonSpec e = resolve(eps, cache);
  std::vector<AuditViolation> out;
  for (std::size_t g = 0; g < cache.tree().size(); ++g) {
    if (cache.count(g) == 0) continue;
    const double lhs = risk_or_throw(f, cache.data(), cache.rows(g), loss);
    const double rhs = risk_or_throw(*cache.predictor(g), cache.data(), cache.rows(g), loss) +
                       epsilon(e, cache.count(g));
    if (lhs > rhs + tolerance) out.push_back({g, cache.tree().group(g).id, "inequality", lhs, rhs});
  }
  return out;
}

std::vector<AuditViolation> working_predictor_mismatches(const TreePredictor& f, const GroupErmCache& cache) {
  std::vector<AuditViolation> out;
  const GroupTree& tree = cache.tree();
  for (std::size_t g = 0; g < tree.size(); ++g) {
    const auto rows = cache.rows(g);
    if (rows.empty()) continue;
    const std::size_t src = f.source(g);
    const auto& expected = cache.predictor(src);
    if (!expected) {
      out.push_back({g, tree.group(g).id, "predictor mismatch", 0.0, 0.0});
      continue;
    }
    const auto want = kernels::parallel::predict_rows(*expected, cache.data(), rows);
    const auto got = kernels::parallel::predict_rows(*f.working(g), cache.data(), rows);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) diff += want[i] != got[i];
    if (diff > 0) {
      out.push_back({g, tree.group(g).id, "predictor mismatch", static_cast<double>(diff), 0.0});
    }
  }
  return out;
}

}  // namespace mgl
