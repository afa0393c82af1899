#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgl/bounds.hpp"
#include "mgl/error.hpp"
#include "mgl/groups.hpp"
#include "mgl/learners.hpp"
#include "mgl/risk.hpp"

namespace mgl {

enum class NodeDecision { kRoot, kUpdated, kInherited, kEmpty };

std::string_view to_string(NodeDecision d);
NodeDecision node_decision_from_string(std::string_view s);

// One visit of the breadth-first pass.
struct TraceEntry {
  std::size_t step = 0;
  std::size_t node = 0;
  std::string group_id;
  std::string parent_id;  // empty for the root
  std::size_t depth = 0;
  std::size_t n_g = 0;
  std::optional<double> risk_parent;     // L_S(f^parent | g)
  std::optional<double> risk_group_erm;  // L_S(h^g | g)
  double epsilon = 0.0;
  std::optional<double> err;  // absent when n_g = 0
  NodeDecision decision = NodeDecision::kInherited;

  json to_json() const;
  static TraceEntry from_json(const json& doc);
};

std::string trace_to_jsonl(std::span<const TraceEntry> trace);
std::vector<TraceEntry> trace_from_jsonl(const std::string& text);

// MGL-Tree output: each node carries a working predictor; x is handled by
// the working predictor of its deepest containing node.
class TreePredictor final : public Predictor {
 public:
  TreePredictor(std::shared_ptr<const GroupTree> tree, std::vector<PredictorPtr> working,
                std::vector<std::size_t> source, std::vector<TraceEntry> trace);

  double score(const ExampleView& x) const override;
  int predict(const ExampleView& x) const override;
  json to_json() const override;

  const GroupTree& tree() const { return *tree_; }
  const PredictorPtr& working(std::size_t node) const { return working_[node]; }
  // Node whose group ERM the working predictor of `node` is.
  std::size_t source(std::size_t node) const { return source_[node]; }
  NodeDecision decision(std::size_t node) const { return trace_[node].decision; }
  const std::vector<TraceEntry>& trace() const { return trace_; }

  static TreePredictor from_json(const json& doc, std::shared_ptr<const GroupTree> tree);

 private:
  std::shared_ptr<const GroupTree> tree_;
  std::vector<PredictorPtr> working_;
  std::vector<std::size_t> source_;
  std::vector<TraceEntry> trace_;  // indexed by node
};

TreePredictor mgl_tree(const GroupErmCache& cache, const EpsilonSpec& eps, const Loss& loss);
TreePredictor mgl_tree(const Dataset& train, std::shared_ptr<const GroupTree> tree, const LearnerSpec& spec,
                       const EpsilonSpec& eps, const Loss& loss);

// Ordered (group, hypothesis) pairs with a default; the first entry whose
// group contains x decides.
class DecisionList final : public Predictor {
 public:
  struct Entry {
    std::size_t node;  // group node in the tree
    std::size_t hypothesis;  // node whose group ERM is used
    PredictorPtr predictor;
    double violation;
  };

  DecisionList(std::shared_ptr<const GroupTree> tree, PredictorPtr default_predictor);

  void prepend(Entry e) { entries_.insert(entries_.begin(), std::move(e)); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const Predictor& handler(const ExampleView& x) const;

  double score(const ExampleView& x) const override { return handler(x).score(x); }
  int predict(const ExampleView& x) const override { return handler(x).predict(x); }
  json to_json() const override;

  static DecisionList from_json(const json& doc, std::shared_ptr<const GroupTree> tree);

 private:
  std::shared_ptr<const GroupTree> tree_;
  PredictorPtr default_;
  std::vector<Entry> entries_;
};

class PrependCapError : public Error {
 public:
  PrependCapError(std::string msg, std::shared_ptr<DecisionList> partial)
      : Error(std::move(msg)), partial_(std::move(partial)) {}
  const DecisionList& partial() const { return *partial_; }

 private:
  std::shared_ptr<DecisionList> partial_;
};

// Candidate hypotheses are the group ERMs of nodes with n_g >= 1 (the root's
// being the global ERM). cap = 0 selects 4 * |G|.
DecisionList prepend(const GroupErmCache& cache, const EpsilonSpec& eps, const Loss& loss, std::size_t cap = 0);

struct PrependViolation {
  std::string group_id;
  std::string hypothesis_id;
  double value;  // L_S(f|g) - L_S(h|g) - eps(g) >= 0
};

// Re-scans all (group, candidate) pairs against the stopping test.
std::vector<PrependViolation> prepend_violations(const Predictor& f, const GroupErmCache& cache,
                                                 const EpsilonSpec& eps, const Loss& loss);

enum class Fallback { kError, kRoot };

// Per-leaf group ERMs routed by leaf membership.
class PartitionPredictor final : public Predictor {
 public:
  PartitionPredictor(std::shared_ptr<const GroupTree> tree, std::vector<PredictorPtr> leaf, PredictorPtr root,
                     Fallback fallback);

  const Predictor& handler(const ExampleView& x) const;
  double score(const ExampleView& x) const override { return handler(x).score(x); }
  int predict(const ExampleView& x) const override { return handler(x).predict(x); }
  json to_json() const override;

  static PartitionPredictor from_json(const json& doc, std::shared_ptr<const GroupTree> tree);

 private:
  std::shared_ptr<const GroupTree> tree_;
  std::vector<PredictorPtr> leaf_;  // non-null exactly at leaves
  PredictorPtr root_;
  Fallback fallback_;
};

PartitionPredictor decoupled(const GroupErmCache& cache, Fallback fallback = Fallback::kRoot);

struct AuditViolation {
  std::size_t step = 0;
  std::string group_id;
  std::string kind;  // "rule disagreement", "inequality", "monotonicity", "predictor mismatch"
  double lhs = 0.0;
  double rhs = 0.0;
};

struct AuditVerdict {
  std::size_t steps = 0;
  std::vector<AuditViolation> violations;

  bool clean() const { return violations.empty(); }
  json to_json() const;
};

inline constexpr double kAuditTolerance = 1e-9;

// Replays the breadth-first pass recorded in `trace`. After every step each
// visited group with data must satisfy L_S(f|g) <= L_S(h^g|g) + eps(g), no
// update may raise an ancestor's risk, and each recorded decision must match
// the update rule. Throws MismatchError when the trace does not fit the tree.
AuditVerdict monotonicity_audit(std::span<const TraceEntry> trace, const GroupErmCache& cache,
                                const EpsilonSpec& eps, const Loss& loss);

// Final multi-group inequality for an arbitrary predictor on the training set.
std::vector<AuditViolation> multigroup_violations(const Predictor& f, const GroupErmCache& cache,
                                                  const EpsilonSpec& eps, const Loss& loss,
                                                  double tolerance = kAuditTolerance);

// Checks that every updated node of a TreePredictor carries its node's group
// ERM and every inherited node its parent's predictor, pointwise on the
// training rows of that node.
std::vector<AuditViolation> working_predictor_mismatches(const TreePredictor& f, const GroupErmCache& cache);

}  // namespace mgl
