#include "mgl/groups.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <unordered_map>

#include "mgl/error.hpp"
#include "mgl/kernels.hpp"

namespace mgl {

const std::string* Group::value_of(std::string_view attribute) const {
  for (const auto& c : conjuncts) {
    if (c.attribute == attribute) return &c.category;
  }
  return nullptr;
}

Group Group::root() { return Group{std::string(kRootId), {}}; }

Group Group::from_json(const json& doc) {
  Group g;
  try {
    if (doc.contains("conjuncts")) {
      const auto& c = doc.at("conjuncts");
      if (c.is_object()) {
        for (const auto& [attr, cat] : c.items()) g.conjuncts.push_back({attr, cat.get<std::string>()});
      } else {
        for (const auto& pair : c) {
          g.conjuncts.push_back({pair.at(0).get<std::string>(), pair.at(1).get<std::string>()});
        }
      }
    }
    g.id = doc.contains("id") ? doc.at("id").get<std::string>() : default_group_id(g.conjuncts);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed group: ") + e.what());
  }
  std::set<std::string> attrs;
  for (const auto& c : g.conjuncts) {
    if (!attrs.insert(c.attribute).second) {
      throw SchemaError("group '" + g.id + "' binds attribute '" + c.attribute + "' twice");
    }
  }
  return g;
}

json Group::to_json() const {
  json c = json::array();
  for (const auto& k : conjuncts) c.push_back({k.attribute, k.category});
  return {{"id", id}, {"conjuncts", c}};
}

std::string default_group_id(const std::vector<Conjunct>& conjuncts) {
  if (conjuncts.empty()) return std::string(kRootId);
  std::string id;
  for (std::size_t i = 0; i < conjuncts.size(); ++i) {
    if (i) id += "∧";
    id += conjuncts[i].attribute + "=" + conjuncts[i].category;
  }
  return id;
}

bool structurally_disjoint(const Group& a, const Group& b) {
  for (const auto& c : a.conjuncts) {
    const std::string* other = b.value_of(c.attribute);
    if (other != nullptr && *other != c.category) return true;
  }
  return false;
}

bool structurally_contains(const Group& outer, const Group& inner) {
  for (const auto& c : outer.conjuncts) {
    const std::string* v = inner.value_of(c.attribute);
    if (v == nullptr || *v != c.category) return false;
  }
  return true;
}

BoundPredicate bind(const Group& g, const Dataset& ds) {
  BoundPredicate p;
  for (const auto& c : g.conjuncts) {
    const int col = ds.categorical_index(c.attribute);
    if (col < 0) {
      throw SchemaError("group '" + g.id + "' references unknown categorical attribute '" +
                        c.attribute + "'");
    }
    const int32_t code = ds.category_code(static_cast<std::size_t>(col), c.category);
    if (code < 0) p.unsatisfiable = true;
    p.terms.emplace_back(col, code);
  }
  return p;
}

GroupTree GroupTree::from_groups(std::vector<Group> groups, const Dataset& reference) {
  auto root_it = std::find_if(groups.begin(), groups.end(), [](const Group& g) { return g.is_root(); });
  if (root_it == groups.end()) groups.insert(groups.begin(), Group::root());

  std::set<std::string> ids;
  for (const auto& g : groups) {
    if (!ids.insert(g.id).second) throw SchemaError("duplicate group id '" + g.id + "'");
  }
  const auto verdict = validate_hierarchical(groups, nullptr);
  if (!verdict.valid) {
    const auto& v = verdict.violations.front();
    throw SchemaError("groups are not hierarchical: (" + v.first + ", " + v.second + ") " + v.reason);
  }

  const std::size_t n = groups.size();
  // Most specific strict superset; in a laminar family the supersets form a chain.
  std::vector<int> parent(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (groups[i].is_root()) continue;
    int best = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !structurally_contains(groups[j], groups[i])) continue;
      if (best < 0 || groups[j].conjuncts.size() > groups[static_cast<std::size_t>(best)].conjuncts.size()) {
        best = static_cast<int>(j);
      }
    }
    parent[i] = best;
  }
  std::vector<std::vector<std::size_t>> kids(n);
  std::size_t root_index = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (parent[i] < 0) {
      root_index = i;
    } else {
      kids[static_cast<std::size_t>(parent[i])].push_back(i);
    }
  }
  for (auto& k : kids) {
    std::sort(k.begin(), k.end(), [&](std::size_t a, std::size_t b) { return groups[a].id < groups[b].id; });
  }

  GroupTree tree;
  std::vector<std::size_t> new_index(n);
  std::deque<std::size_t> queue{root_index};
  std::vector<std::size_t> order;
  while (!queue.empty()) {
    const std::size_t cur = queue.front();
    queue.pop_front();
    new_index[cur] = order.size();
    order.push_back(cur);
    for (std::size_t c : kids[cur]) queue.push_back(c);
  }
  tree.groups_.reserve(n);
  tree.parent_.assign(n, -1);
  tree.children_.assign(n, {});
  tree.depth_.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t old = order[pos];
    tree.groups_.push_back(groups[old]);
    tree.preds_.push_back(bind(groups[old], reference));
    if (parent[old] >= 0) {
      const std::size_t p = new_index[static_cast<std::size_t>(parent[old])];
      tree.parent_[pos] = static_cast<int>(p);
      tree.depth_[pos] = tree.depth_[p] + 1;
      tree.children_[p].push_back(pos);
    }
  }
  for (std::size_t k = 0; k < reference.num_categorical(); ++k) {
    tree.cat_names_.push_back(reference.categorical_name(k));
    tree.cat_values_.push_back(reference.category_names(k));
  }
  return tree;
}

std::optional<std::size_t> GroupTree::find(std::string_view id) const {
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t GroupTree::deepest_containing(const ExampleView& x) const {
  std::size_t node = 0;
  for (;;) {
    bool moved = false;
    for (std::size_t c : children_[node]) {
      if (preds_[c].matches(x.categories)) {
        node = c;
        moved = true;
        break;
      }
    }
    if (!moved) return node;
  }
}

void GroupTree::check_compatible(const Dataset& ds) const {
  if (ds.num_categorical() != cat_names_.size()) {
    throw MismatchError("dataset has " + std::to_string(ds.num_categorical()) +
                        " categorical columns, hierarchy expects " + std::to_string(cat_names_.size()));
  }
  for (std::size_t k = 0; k < cat_names_.size(); ++k) {
    if (ds.categorical_name(k) != cat_names_[k] || ds.category_names(k) != cat_values_[k]) {
      throw MismatchError("categorical column '" + ds.categorical_name(k) +
                          "' is encoded differently from the hierarchy's reference data");
    }
  }
}

std::string GroupTree::describe(std::span<const int32_t> categories) const {
  std::string out;
  for (std::size_t k = 0; k < cat_names_.size() && k < categories.size(); ++k) {
    if (k) out += ", ";
    const int32_t code = categories[k];
    out += cat_names_[k] + "=" +
           (code >= 0 && static_cast<std::size_t>(code) < cat_values_[k].size() ? cat_values_[k][static_cast<std::size_t>(code)]
                                                                                 : std::string("?"));
  }
  return out;
}

json GroupTree::to_json() const {
  json nodes = json::array();
  for (std::size_t i = 0; i < size(); ++i) {
    json node = groups_[i].to_json();
    node["depth"] = depth_[i];
    node["parent"] = parent_[i] < 0 ? json(nullptr) : json(groups_[static_cast<std::size_t>(parent_[i])].id);
    nodes.push_back(std::move(node));
  }
  return {{"nodes", nodes}};
}

GroupTree build_hierarchy(const Dataset& reference, std::span<const std::string> attribute_order) {
  std::vector<Group> groups{Group::root()};
  std::vector<Group> level{Group::root()};
  std::set<std::string> used;
  for (const auto& attr : attribute_order) {
    if (!used.insert(attr).second) throw SchemaError("attribute '" + attr + "' repeated in order");
    const int col = reference.categorical_index(attr);
    if (col < 0) throw SchemaError("unknown categorical attribute '" + attr + "'");
    const auto& cats = reference.category_names(static_cast<std::size_t>(col));
    if (cats.empty()) throw SchemaError("attribute '" + attr + "' has zero categories");
    std::vector<Group> next;
    for (const auto& parent : level) {
      for (const auto& cat : cats) {
        Group g;
        g.conjuncts = parent.conjuncts;
        g.conjuncts.push_back({attr, cat});
        g.id = parent.is_root() ? cat : parent.id + "∧" + cat;
        next.push_back(g);
      }
    }
    groups.insert(groups.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return GroupTree::from_groups(std::move(groups), reference);
}

GroupTree build_hierarchy(const AttributeSchema& schema, std::span<const std::string> attribute_order) {
  for (const auto& attr : attribute_order) {
    const ColumnSpec* col = schema.find(attr);
    if (col == nullptr) {
      bool is_bin = std::any_of(schema.bins.begin(), schema.bins.end(),
                                [&](const BinSpec& b) { return b.name == attr; });
      if (!is_bin) throw SchemaError("unknown attribute '" + attr + "'");
    } else if (col->kind != ColumnKind::kCategorical) {
      throw SchemaError("attribute '" + attr + "' is not categorical");
    } else if (col->categories.empty()) {
      throw SchemaError("attribute '" + attr + "' has zero categories");
    }
  }
  return build_hierarchy(Dataset::from_rows(schema, {}), attribute_order);
}

HierarchySpec HierarchySpec::from_json(const json& doc) {
  HierarchySpec spec;
  if (doc.is_array()) {
    spec.attribute_order = doc.get<std::vector<std::string>>();
    return spec;
  }
  if (!doc.is_object()) throw ConfigError("hierarchy must be an object or attribute list");
  for (const auto& [key, _] : doc.items()) {
    if (key != "attribute_order" && key != "nodes") throw ConfigError("unknown hierarchy key '" + key + "'");
  }
  try {
    if (doc.contains("attribute_order")) {
      spec.attribute_order = doc.at("attribute_order").get<std::vector<std::string>>();
    }
    if (doc.contains("nodes")) {
      for (const auto& n : doc.at("nodes")) spec.nodes.push_back(Group::from_json(n));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed hierarchy: ") + e.what());
  }
  if (spec.attribute_order.empty() == spec.nodes.empty()) {
    throw ConfigError("hierarchy needs exactly one of 'attribute_order' or 'nodes'");
  }
  return spec;
}

json HierarchySpec::to_json() const {
  if (!attribute_order.empty()) return {{"attribute_order", attribute_order}};
  json nodes_doc = json::array();
  for (const auto& g : nodes) nodes_doc.push_back(g.to_json());
  return {{"nodes", nodes_doc}};
}

std::vector<Group> HierarchySpec::groups(const Dataset& reference) const {
  if (!attribute_order.empty()) return build_hierarchy(reference, attribute_order).groups();
  std::vector<Group> out = nodes;
  if (std::none_of(out.begin(), out.end(), [](const Group& g) { return g.is_root(); })) {
    out.insert(out.begin(), Group::root());
  }
  return out;
}

GroupTree HierarchySpec::build(const Dataset& reference) const {
  if (!attribute_order.empty()) return build_hierarchy(reference, attribute_order);
  return GroupTree::from_groups(nodes, reference);
}

HierarchyVerdict validate_hierarchical(std::span<const Group> groups, const Dataset* ds) {
  HierarchyVerdict verdict;
  auto fail = [&](const Group& a, const Group& b, std::string reason) {
    verdict.valid = false;
    verdict.violations.push_back({a.id, b.id, std::move(reason)});
  };
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const Group& a = groups[i];
      const Group& b = groups[j];
      if (structurally_disjoint(a, b)) continue;
      const bool a_in_b = structurally_contains(b, a);
      const bool b_in_a = structurally_contains(a, b);
      if (a_in_b && b_in_a) {
        fail(a, b, "identical predicates");
      } else if (!a_in_b && !b_in_a) {
        fail(a, b, "overlap without containment");
      }
    }
  }
  if (ds == nullptr || ds->empty()) return verdict;

  std::vector<BoundPredicate> preds;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    try {
      preds.push_back(bind(groups[i], *ds));
      usable.push_back(i);
    } catch (const SchemaError& e) {
      verdict.valid = false;
      verdict.violations.push_back({groups[i].id, "", e.what()});
    }
  }
  // Co-membership counts per pair: pair (a, b) is fine iff the overlap is
  // empty or equals the smaller group.
  std::vector<std::size_t> count(groups.size(), 0);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> overlap;
  std::vector<std::size_t> hits;
  for (std::size_t r = 0; r < ds->size(); ++r) {
    hits.clear();
    const auto cats = ds->categories(r);
    for (std::size_t k = 0; k < usable.size(); ++k) {
      if (preds[k].matches(cats)) hits.push_back(usable[k]);
    }
    for (std::size_t a = 0; a < hits.size(); ++a) {
      ++count[hits[a]];
      for (std::size_t b = a + 1; b < hits.size(); ++b) ++overlap[{hits[a], hits[b]}];
    }
  }
  std::set<std::pair<std::string, std::string>> reported;
  for (const auto& v : verdict.violations) reported.insert({v.first, v.second});
  for (const auto& [pair, c] : overlap) {
    const auto [a, b] = pair;
    if (c == count[a] || c == count[b]) continue;
    if (reported.count({groups[a].id, groups[b].id})) continue;
    fail(groups[a], groups[b], "rows overlap without containment (" + std::to_string(c) + " shared)");
  }
  return verdict;
}

std::vector<uint8_t> membership_vector(const Group& g, const Dataset& ds) {
  return kernels::parallel::membership_mask(bind(g, ds), ds);
}

std::vector<std::vector<uint32_t>> node_rows(const GroupTree& tree, const Dataset& ds) {
  tree.check_compatible(ds);
  const auto deepest = kernels::parallel::route_rows(tree, ds);
  std::vector<std::vector<uint32_t>> rows(tree.size());
  for (std::size_t r = 0; r < deepest.size(); ++r) {
    for (int node = static_cast<int>(deepest[r]); node >= 0; node = tree.parent(static_cast<std::size_t>(node))) {
      rows[static_cast<std::size_t>(node)].push_back(static_cast<uint32_t>(r));
    }
  }
  return rows;
}

std::vector<std::size_t> group_counts(const GroupTree& tree, const Dataset& ds) {
  const auto rows = node_rows(tree, ds);
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.size());
  return out;
}

}  // namespace mgl
