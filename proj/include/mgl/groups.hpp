#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mgl/data.hpp"

namespace mgl {

struct Conjunct {
  std::string attribute;
  std::string category;

  friend bool operator==(const Conjunct&, const Conjunct&) = default;
};

// A group is a conjunction of attribute == category tests. The empty
// conjunction is the whole input space.
struct Group {
  std::string id;
  std::vector<Conjunct> conjuncts;

  bool is_root() const { return conjuncts.empty(); }
  // Category bound to `attribute`, or nullptr.
  const std::string* value_of(std::string_view attribute) const;

  static Group root();
  static Group from_json(const json& doc);
  json to_json() const;
};

inline constexpr std::string_view kRootId = "ALL";

// "attr=cat∧attr=cat" in conjunct order; kRootId for the empty conjunction.
std::string default_group_id(const std::vector<Conjunct>& conjuncts);

// Two conjunctions are disjoint iff they bind some attribute to different
// categories.
bool structurally_disjoint(const Group& a, const Group& b);
// True iff every conjunct of `outer` appears in `inner`, i.e. inner ⊆ outer.
bool structurally_contains(const Group& outer, const Group& inner);

// Group predicate resolved against the categorical columns of a dataset.
// A category absent from the dataset vocabulary makes the predicate empty.
struct BoundPredicate {
  std::vector<std::pair<int32_t, int32_t>> terms;  // (categorical index, code)
  bool unsatisfiable = false;

  bool matches(std::span<const int32_t> categories) const {
    if (unsatisfiable) return false;
    for (const auto& [col, code] : terms) {
      if (categories[static_cast<std::size_t>(col)] != code) return false;
    }
    return true;
  }
};

// Throws SchemaError when the group references an unknown attribute.
BoundPredicate bind(const Group& g, const Dataset& ds);

// Rooted hierarchy of nested groups. Nodes are stored in breadth-first order
// (children sorted by id), so node 0 is the root and parent(i) < i.
class GroupTree {
 public:
  GroupTree() = default;

  // Accepts any laminar family of conjunctions; the root is added when
  // missing. The parent of a node is its most specific strict superset.
  // Throws SchemaError when the family is not hierarchical.
  static GroupTree from_groups(std::vector<Group> groups, const Dataset& reference);

  std::size_t size() const { return groups_.size(); }
  std::size_t root() const { return 0; }
  const Group& group(std::size_t node) const { return groups_[node]; }
  const std::vector<Group>& groups() const { return groups_; }
  int parent(std::size_t node) const { return parent_[node]; }
  std::span<const std::size_t> children(std::size_t node) const { return children_[node]; }
  std::size_t depth(std::size_t node) const { return depth_[node]; }
  bool is_leaf(std::size_t node) const { return children_[node].empty(); }
  std::optional<std::size_t> find(std::string_view id) const;

  const BoundPredicate& predicate(std::size_t node) const { return preds_[node]; }
  bool contains(std::size_t node, std::span<const int32_t> categories) const {
    return preds_[node].matches(categories);
  }

  // Root-to-leaf descent; stops at the first node none of whose children
  // contains x.
  std::size_t deepest_containing(const ExampleView& x) const;

  // Throws MismatchError when `ds` encodes categories differently from the
  // dataset the tree was bound to.
  void check_compatible(const Dataset& ds) const;
  // "attr=value, ..." for the categorical part of an example.
  std::string describe(std::span<const int32_t> categories) const;

  json to_json() const;

 private:
  std::vector<Group> groups_;
  std::vector<BoundPredicate> preds_;
  std::vector<int> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> depth_;
  std::vector<std::string> cat_names_;
  std::vector<std::vector<std::string>> cat_values_;
};

// Level k holds every conjunction of the first k attributes' categories.
GroupTree build_hierarchy(const Dataset& reference, std::span<const std::string> attribute_order);
// Same, for a schema whose categorical columns declare their categories.
GroupTree build_hierarchy(const AttributeSchema& schema, std::span<const std::string> attribute_order);

// JSON form of a hierarchy: either an attribute order or an explicit node list.
struct HierarchySpec {
  std::vector<std::string> attribute_order;
  std::vector<Group> nodes;

  static HierarchySpec from_json(const json& doc);
  json to_json() const;
  // Groups named by the spec without building a tree (root included).
  std::vector<Group> groups(const Dataset& reference) const;
  GroupTree build(const Dataset& reference) const;
};

struct HierarchyViolation {
  std::string first;
  std::string second;
  std::string reason;
};

struct HierarchyVerdict {
  bool valid = true;
  std::vector<HierarchyViolation> violations;
};

// Every distinct pair must be disjoint or strictly nested, both structurally
// and as row sets of `ds` (when given).
HierarchyVerdict validate_hierarchical(std::span<const Group> groups, const Dataset* ds = nullptr);

std::vector<uint8_t> membership_vector(const Group& g, const Dataset& ds);

// Row indices (ascending) of every node; a row appears in each node on its
// root-to-deepest path.
std::vector<std::vector<uint32_t>> node_rows(const GroupTree& tree, const Dataset& ds);

// n_g for every node.
std::vector<std::size_t> group_counts(const GroupTree& tree, const Dataset& ds);

}  // namespace mgl
