#include "mgl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mgl/error.hpp"

namespace mgl {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& cell, std::size_t line, std::string_view column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (cell.empty() || end == begin || *end != '\0' || std::isnan(v)) {
    throw ValueError("line " + std::to_string(line) + ": column '" + std::string(column) +
                     "' has non-numeric value '" + cell + "'");
  }
  return v;
}

uint8_t parse_label(const std::string& cell, std::size_t line, std::string_view column) {
  if (cell == "0" || cell == "0.0") return 0;
  if (cell == "1" || cell == "1.0") return 1;
  throw ValueError("line " + std::to_string(line) + ": label column '" + std::string(column) +
                   "' must be 0 or 1, got '" + cell + "'");
}

// Splits one CSV record. Double quotes delimit fields that contain commas;
// a doubled quote inside a quoted field is a literal quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Fnv1a {
 public:
  void add(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  uint64_t value() const { return hash_; }

 private:
  uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kCategorical: return "categorical";
    case ColumnKind::kNumeric: return "numeric";
    case ColumnKind::kBinaryLabel: return "binary-label";
  }
  return "numeric";
}

ColumnKind column_kind_from_string(std::string_view name) {
  if (name == "categorical") return ColumnKind::kCategorical;
  if (name == "numeric") return ColumnKind::kNumeric;
  if (name == "binary-label" || name == "binary_label" || name == "label") {
    return ColumnKind::kBinaryLabel;
  }
  throw SchemaError("unknown column kind '" + std::string(name) + "'");
}

const std::string& BinSpec::label_for(double value) const {
  auto it = std::upper_bound(edges.begin(), edges.end(), value);
  return labels[static_cast<std::size_t>(it - edges.begin())];
}

const ColumnSpec* AttributeSchema::find(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

bool AttributeSchema::is_group_attribute(std::string_view name) const {
  return std::find(group_attributes.begin(), group_attributes.end(), name) !=
         group_attributes.end();
}

void AttributeSchema::validate() const {
  std::set<std::string> names;
  for (const auto& c : columns) {
    if (c.name.empty()) throw SchemaError("column with empty name");
    if (!names.insert(c.name).second) throw SchemaError("duplicate column '" + c.name + "'");
    std::set<std::string> cats(c.categories.begin(), c.categories.end());
    if (cats.size() != c.categories.size()) {
      throw SchemaError("column '" + c.name + "' declares duplicate categories");
    }
  }
  for (const auto& b : bins) {
    const ColumnSpec* src = find(b.source);
    if (src == nullptr) throw SchemaError("bin '" + b.name + "': missing source column '" + b.source + "'");
    if (src->kind != ColumnKind::kNumeric) {
      throw SchemaError("bin '" + b.name + "': source column '" + b.source + "' is not numeric");
    }
    if (b.labels.size() != b.edges.size() + 1) {
      throw SchemaError("bin '" + b.name + "': expected " + std::to_string(b.edges.size() + 1) +
                        " labels");
    }
    for (std::size_t i = 1; i < b.edges.size(); ++i) {
      if (!(b.edges[i - 1] < b.edges[i])) {
        throw SchemaError("bin '" + b.name + "': edges must be strictly increasing");
      }
    }
    const ColumnSpec* existing = find(b.name);
    if (existing != nullptr && !existing->derived) {
      throw SchemaError("duplicate column '" + b.name + "'");
    }
    if (existing == nullptr && !names.insert(b.name).second) {
      throw SchemaError("duplicate column '" + b.name + "'");
    }
  }
  const ColumnSpec* label = find(label_column);
  if (label == nullptr) throw SchemaError("missing label column '" + label_column + "'");
  if (label->kind != ColumnKind::kBinaryLabel) {
    throw SchemaError("label column '" + label_column + "' must have kind binary-label");
  }
  for (const auto& c : columns) {
    if (c.kind == ColumnKind::kBinaryLabel && c.name != label_column) {
      throw SchemaError("column '" + c.name + "' is binary-label but is not the label column");
    }
  }
  std::set<std::string> seen;
  for (const auto& g : group_attributes) {
    if (!seen.insert(g).second) throw SchemaError("group attribute '" + g + "' listed twice");
    const ColumnSpec* c = find(g);
    bool is_bin = std::any_of(bins.begin(), bins.end(), [&](const BinSpec& b) { return b.name == g; });
    if (c == nullptr && !is_bin) throw SchemaError("missing group attribute column '" + g + "'");
    if (c != nullptr && c->kind != ColumnKind::kCategorical) {
      throw SchemaError("group attribute '" + g + "' must be categorical (declare bins for numeric)");
    }
  }
}

AttributeSchema AttributeSchema::from_json(const json& doc) {
  static const std::set<std::string> kKeys = {"columns", "label", "group_attributes", "bins",
                                              "group_features"};
  if (!doc.is_object()) throw SchemaError("schema must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) throw SchemaError("unknown schema key '" + key + "'");
  }
  AttributeSchema s;
  try {
    for (const auto& c : doc.at("columns")) {
      ColumnSpec col;
      col.name = c.at("name").get<std::string>();
      col.kind = column_kind_from_string(c.at("kind").get<std::string>());
      if (c.contains("categories")) col.categories = c.at("categories").get<std::vector<std::string>>();
      s.columns.push_back(std::move(col));
    }
    s.label_column = doc.at("label").get<std::string>();
    if (doc.contains("group_attributes")) {
      s.group_attributes = doc.at("group_attributes").get<std::vector<std::string>>();
    }
    if (doc.contains("group_features")) s.group_features = doc.at("group_features").get<bool>();
    if (doc.contains("bins")) {
      for (const auto& [name, b] : doc.at("bins").items()) {
        BinSpec bin;
        bin.name = name;
        bin.source = b.at("source").get<std::string>();
        bin.edges = b.at("edges").get<std::vector<double>>();
        bin.labels = b.at("labels").get<std::vector<std::string>>();
        s.bins.push_back(std::move(bin));
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
  s.validate();
  return s;
}

json AttributeSchema::to_json() const {
  json cols = json::array();
  for (const auto& c : columns) {
    if (c.derived) continue;
    json col = {{"name", c.name}, {"kind", std::string(mgl::to_string(c.kind))}};
    if (!c.categories.empty()) col["categories"] = c.categories;
    cols.push_back(std::move(col));
  }
  json doc = {{"columns", cols}, {"label", label_column}, {"group_attributes", group_attributes},
              {"group_features", group_features}};
  if (!bins.empty()) {
    json b = json::object();
    for (const auto& bin : bins) {
      b[bin.name] = {{"source", bin.source}, {"edges", bin.edges}, {"labels", bin.labels}};
    }
    doc["bins"] = std::move(b);
  }
  return doc;
}

Dataset Dataset::from_rows(AttributeSchema schema, const std::vector<std::vector<std::string>>& rows,
                           std::size_t first_line) {
  schema.validate();
  // Drop previously derived columns; they are recomputed from the bins.
  std::erase_if(schema.columns, [](const ColumnSpec& c) { return c.derived; });
  const std::size_t raw_cols = schema.columns.size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != raw_cols) {
      throw ValueError("line " + std::to_string(first_line + r) + ": expected " +
                       std::to_string(raw_cols) + " values, got " + std::to_string(rows[r].size()));
    }
  }

  Dataset ds;
  const std::size_t n = rows.size();
  ds.labels_.resize(n);

  // Resolve categorical vocabularies of raw columns.
  std::vector<std::unordered_map<std::string, int32_t>> vocab(raw_cols);
  for (std::size_t c = 0; c < raw_cols; ++c) {
    auto& col = schema.columns[c];
    if (col.kind != ColumnKind::kCategorical) continue;
    if (col.categories.empty()) {
      std::set<std::string> seen;
      for (const auto& row : rows) seen.insert(row[c]);
      col.categories.assign(seen.begin(), seen.end());
    }
    for (std::size_t k = 0; k < col.categories.size(); ++k) {
      vocab[c].emplace(col.categories[k], static_cast<int32_t>(k));
    }
  }
  for (const auto& bin : schema.bins) {
    ColumnSpec col;
    col.name = bin.name;
    col.kind = ColumnKind::kCategorical;
    col.categories = bin.labels;
    col.derived = true;
    schema.columns.push_back(std::move(col));
  }

  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto kind = schema.columns[c].kind;
    if (kind == ColumnKind::kCategorical) ds.categorical_columns_.push_back(c);
    if (kind == ColumnKind::kNumeric) ds.numeric_columns_.push_back(c);
  }
  const std::size_t n_cat = ds.categorical_columns_.size();
  const std::size_t n_num = ds.numeric_columns_.size();
  ds.codes_.resize(n * n_cat);
  ds.numeric_.resize(n * n_num);

  std::size_t label_col = 0;
  for (std::size_t c = 0; c < raw_cols; ++c) {
    if (schema.columns[c].name == schema.label_column) label_col = c;
  }
  // Numeric position of every bin source.
  std::vector<std::size_t> bin_source_pos;
  for (const auto& bin : schema.bins) {
    for (std::size_t k = 0; k < n_num; ++k) {
      if (schema.columns[ds.numeric_columns_[k]].name == bin.source) bin_source_pos.push_back(k);
    }
  }

  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t line = first_line + r;
    const auto& row = rows[r];
    std::size_t cat_pos = 0, num_pos = 0;
    for (std::size_t c = 0; c < raw_cols; ++c) {
      const auto& col = schema.columns[c];
      switch (col.kind) {
        case ColumnKind::kCategorical: {
          auto it = vocab[c].find(row[c]);
          if (it == vocab[c].end()) {
            throw ValueError("line " + std::to_string(line) + ": column '" + col.name +
                             "' has undeclared category '" + row[c] + "'");
          }
          ds.codes_[r * n_cat + cat_pos++] = it->second;
          break;
        }
        case ColumnKind::kNumeric:
          ds.numeric_[r * n_num + num_pos++] = parse_double(row[c], line, col.name);
          break;
        case ColumnKind::kBinaryLabel:
          ds.labels_[r] = parse_label(row[label_col], line, col.name);
          break;
      }
    }
    for (std::size_t b = 0; b < schema.bins.size(); ++b) {
      const double v = ds.numeric_[r * n_num + bin_source_pos[b]];
      const auto& labels = schema.bins[b].labels;
      const auto& lab = schema.bins[b].label_for(v);
      ds.codes_[r * n_cat + cat_pos++] =
          static_cast<int32_t>(std::find(labels.begin(), labels.end(), lab) - labels.begin());
    }
  }
  ds.schema_ = std::move(schema);
  ds.build_features();
  return ds;
}

void Dataset::build_features() {
  feature_names_.clear();
  std::vector<std::pair<std::size_t, std::size_t>> onehot;  // (categorical index, width)
  for (std::size_t k = 0; k < numeric_columns_.size(); ++k) {
    feature_names_.push_back(schema_.columns[numeric_columns_[k]].name);
  }
  for (std::size_t k = 0; k < categorical_columns_.size(); ++k) {
    const auto& col = schema_.columns[categorical_columns_[k]];
    if (!schema_.group_features && schema_.is_group_attribute(col.name)) continue;
    onehot.emplace_back(k, col.categories.size());
    for (const auto& cat : col.categories) feature_names_.push_back(col.name + "=" + cat);
  }
  const std::size_t d = feature_names_.size();
  const std::size_t n = size();
  const std::size_t n_num = numeric_columns_.size();
  const std::size_t n_cat = categorical_columns_.size();
  features_.assign(n * d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double* out = features_.data() + r * d;
    std::copy_n(numeric_.data() + r * n_num, n_num, out);
    std::size_t offset = n_num;
    for (const auto& [k, width] : onehot) {
      out[offset + static_cast<std::size_t>(codes_[r * n_cat + k])] = 1.0;
      offset += width;
    }
  }
}

std::span<const double> Dataset::features(std::size_t row) const {
  const std::size_t d = num_features();
  return {features_.data() + row * d, d};
}

int Dataset::categorical_index(std::string_view name) const {
  for (std::size_t k = 0; k < categorical_columns_.size(); ++k) {
    if (schema_.columns[categorical_columns_[k]].name == name) return static_cast<int>(k);
  }
  return -1;
}

const std::string& Dataset::categorical_name(std::size_t index) const {
  return schema_.columns[categorical_columns_[index]].name;
}

const std::vector<std::string>& Dataset::category_names(std::size_t index) const {
  return schema_.columns[categorical_columns_[index]].categories;
}

int32_t Dataset::category_code(std::size_t index, std::string_view category) const {
  const auto& cats = category_names(index);
  auto it = std::find(cats.begin(), cats.end(), category);
  return it == cats.end() ? -1 : static_cast<int32_t>(it - cats.begin());
}

std::span<const int32_t> Dataset::categories(std::size_t row) const {
  const std::size_t c = num_categorical();
  return {codes_.data() + row * c, c};
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.schema_ = schema_;
  out.categorical_columns_ = categorical_columns_;
  out.numeric_columns_ = numeric_columns_;
  out.feature_names_ = feature_names_;
  const std::size_t c = num_categorical(), k = numeric_columns_.size(), d = num_features();
  out.codes_.reserve(rows.size() * c);
  out.numeric_.reserve(rows.size() * k);
  out.features_.reserve(rows.size() * d);
  out.labels_.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= size()) throw ValueError("subset row " + std::to_string(r) + " out of range");
    out.codes_.insert(out.codes_.end(), codes_.begin() + r * c, codes_.begin() + (r + 1) * c);
    out.numeric_.insert(out.numeric_.end(), numeric_.begin() + r * k, numeric_.begin() + (r + 1) * k);
    out.features_.insert(out.features_.end(), features_.begin() + r * d,
                         features_.begin() + (r + 1) * d);
    out.labels_.push_back(labels_[r]);
  }
  return out;
}

std::vector<std::string> Dataset::raw_row(std::size_t row) const {
  std::vector<std::string> out;
  std::size_t cat_pos = 0, num_pos = 0;
  const std::size_t n_cat = num_categorical(), n_num = numeric_columns_.size();
  for (const auto& col : schema_.columns) {
    if (col.derived) continue;
    switch (col.kind) {
      case ColumnKind::kCategorical:
        out.push_back(col.categories[static_cast<std::size_t>(codes_[row * n_cat + cat_pos++])]);
        break;
      case ColumnKind::kNumeric:
        out.push_back(format_double(numeric_[row * n_num + num_pos++]));
        break;
      case ColumnKind::kBinaryLabel:
        out.push_back(labels_[row] ? "1" : "0");
        break;
    }
  }
  return out;
}

std::string Dataset::fingerprint() const {
  Fnv1a h;
  const std::string s = schema_.to_json().dump();
  h.add(s.data(), s.size());
  const uint64_t n = size();
  h.add(&n, sizeof(n));
  h.add(codes_.data(), codes_.size() * sizeof(int32_t));
  h.add(numeric_.data(), numeric_.size() * sizeof(double));
  h.add(labels_.data(), labels_.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h.value()));
  return buf;
}

Dataset load_csv(const std::filesystem::path& path, const AttributeSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = split_record(line);
  if (header.size() == 1 && header[0].empty()) throw IoError("'" + path.string() + "' is empty");

  std::vector<std::size_t> pick;
  for (const auto& col : schema.columns) {
    if (col.derived) continue;
    auto it = std::find(header.begin(), header.end(), col.name);
    if (it == header.end()) throw SchemaError("missing column '" + col.name + "' in " + path.string());
    pick.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_record(line);
    if (cells.size() != header.size()) {
      throw ValueError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    }
    std::vector<std::string> row;
    row.reserve(pick.size());
    for (std::size_t p : pick) row.push_back(std::move(cells[p]));
    rows.push_back(std::move(row));
  }
  return Dataset::from_rows(schema, rows);
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  bool first = true;
  for (const auto& col : ds.schema().columns) {
    if (col.derived) continue;
    out << (first ? "" : ",") << quote_if_needed(col.name);
    first = false;
  }
  out << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto cells = ds.raw_row(r);
    for (std::size_t c = 0; c < cells.size(); ++c) out << (c ? "," : "") << quote_if_needed(cells[c]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

uint64_t mix_seed(uint64_t seed, uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (n < 2) throw ValueError("split needs at least 2 rows");
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw ValueError("test_fraction must lie in (0, 1)");
  }
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n) {
    throw ValueError("test_fraction " + format_double(spec.test_fraction) + " leaves an empty " +
                     (n_test == 0 ? "test" : "train") + " set for n=" + std::to_string(n));
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(mix_seed(spec.seed, spec.trial_index));
  std::shuffle(perm.begin(), perm.end(), rng);
  SplitIndices out;
  out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  auto idx = split_indices(ds.size(), spec);
  return {ds.subset(idx.train), ds.subset(idx.test)};
}

int LeafRule::apply(std::span<const double> x) const {
  if (kind == Kind::kConstant) return label;
  double s = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x[i];
  return s >= 0.0 ? 1 : 0;
}

PlantedModel PlantedModel::from_json(const json& doc) {
  PlantedModel m;
  try {
    if (doc.contains("attributes")) m.attributes = doc.at("attributes").get<std::vector<std::string>>();
    m.dim = doc.value("dim", std::size_t{2});
    m.noise = doc.value("noise", 0.0);
    for (const auto& l : doc.at("leaves")) {
      PlantedLeaf leaf;
      for (const auto& [attr, cat] : l.at("groups").items()) {
        leaf.groups.emplace_back(attr, cat.get<std::string>());
      }
      leaf.count = l.at("count").get<std::size_t>();
      const auto& rule = l.at("rule");
      const auto kind = rule.at("kind").get<std::string>();
      if (kind == "constant") {
        leaf.rule.kind = LeafRule::Kind::kConstant;
        leaf.rule.label = rule.at("label").get<int>();
      } else if (kind == "linear") {
        leaf.rule.kind = LeafRule::Kind::kLinear;
        leaf.rule.weights = rule.at("weights").get<std::vector<double>>();
        leaf.rule.bias = rule.value("bias", 0.0);
      } else {
        throw ConfigError("unknown leaf rule kind '" + kind + "'");
      }
      m.leaves.push_back(std::move(leaf));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed planted model: ") + e.what());
  }
  return m;
}

json PlantedModel::to_json() const {
  json leaves_doc = json::array();
  for (const auto& l : leaves) {
    json groups = json::object();
    for (const auto& [a, c] : l.groups) groups[a] = c;
    json rule;
    if (l.rule.kind == LeafRule::Kind::kConstant) {
      rule = {{"kind", "constant"}, {"label", l.rule.label}};
    } else {
      rule = {{"kind", "linear"}, {"weights", l.rule.weights}, {"bias", l.rule.bias}};
    }
    leaves_doc.push_back({{"groups", groups}, {"count", l.count}, {"rule", rule}});
  }
  return {{"attributes", attributes}, {"dim", dim}, {"noise", noise}, {"leaves", leaves_doc}};
}

namespace {

std::vector<std::string> planted_attributes(const PlantedModel& model) {
  if (!model.attributes.empty()) return model.attributes;
  std::vector<std::string> attrs;
  for (const auto& leaf : model.leaves) {
    for (const auto& [a, _] : leaf.groups) {
      if (std::find(attrs.begin(), attrs.end(), a) == attrs.end()) attrs.push_back(a);
    }
  }
  return attrs;
}

}  // namespace

AttributeSchema synthetic_schema(const PlantedModel& model) {
  AttributeSchema schema;
  const auto attrs = planted_attributes(model);
  for (const auto& a : attrs) {
    std::set<std::string> cats;
    for (const auto& leaf : model.leaves) {
      for (const auto& [attr, cat] : leaf.groups) {
        if (attr == a) cats.insert(cat);
      }
    }
    schema.columns.push_back({a, ColumnKind::kCategorical, {cats.begin(), cats.end()}, false});
  }
  for (std::size_t j = 0; j < model.dim; ++j) {
    schema.columns.push_back({"x" + std::to_string(j + 1), ColumnKind::kNumeric, {}, false});
  }
  schema.columns.push_back({"label", ColumnKind::kBinaryLabel, {}, false});
  schema.label_column = "label";
  schema.group_attributes = attrs;
  return schema;
}

SyntheticDataset make_synthetic(const PlantedModel& model, uint64_t seed) {
  if (!(model.noise >= 0.0 && model.noise < 0.5)) throw ValueError("noise rate must lie in [0, 0.5)");
  if (model.leaves.empty()) throw ValueError("planted model has no leaves");
  if (model.dim == 0) throw ValueError("planted model needs at least one feature dimension");
  const auto attrs = planted_attributes(model);
  for (const auto& leaf : model.leaves) {
    if (leaf.groups.size() != attrs.size()) {
      throw ValueError("every planted leaf must bind each attribute exactly once");
    }
    if (leaf.rule.kind == LeafRule::Kind::kLinear && leaf.rule.weights.size() != model.dim) {
      throw ValueError("linear leaf rule needs " + std::to_string(model.dim) + " weights");
    }
    if (leaf.rule.kind == LeafRule::Kind::kConstant && leaf.rule.label != 0 && leaf.rule.label != 1) {
      throw ValueError("constant leaf rule label must be 0 or 1");
    }
  }

  const AttributeSchema schema = synthetic_schema(model);
  std::mt19937_64 rng(mix_seed(seed, 0));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  SyntheticDataset out;
  std::vector<std::vector<std::string>> rows;
  std::vector<double> x(model.dim);
  for (std::size_t li = 0; li < model.leaves.size(); ++li) {
    const auto& leaf = model.leaves[li];
    std::vector<std::string> cats;
    for (const auto& a : attrs) {
      auto it = std::find_if(leaf.groups.begin(), leaf.groups.end(),
                             [&](const auto& p) { return p.first == a; });
      if (it == leaf.groups.end()) throw ValueError("planted leaf does not bind attribute '" + a + "'");
      cats.push_back(it->second);
    }
    for (std::size_t i = 0; i < leaf.count; ++i) {
      for (auto& v : x) v = unif(rng);
      const int clean = leaf.rule.apply(x);
      const int y = coin(rng) < model.noise ? 1 - clean : clean;
      std::vector<std::string> row = cats;
      for (double v : x) row.push_back(format_double(v));
      row.push_back(y ? "1" : "0");
      rows.push_back(std::move(row));
      out.planted.push_back(static_cast<uint8_t>(clean));
      out.leaf.push_back(li);
    }
  }
  out.data = Dataset::from_rows(schema, rows);
  return out;
}

}  // namespace mgl
