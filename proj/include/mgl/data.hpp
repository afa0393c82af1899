#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace mgl {

using json = nlohmann::json;

enum class ColumnKind { kCategorical, kNumeric, kBinaryLabel };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view name);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Pre-declared category set. Empty means "infer from data".
  std::vector<std::string> categories;
  // Set on categorical columns produced from a BinSpec.
  bool derived = false;
};

// Maps a numeric source column onto named, left-closed intervals:
// value v gets labels[i] where i is the number of edges <= v.
struct BinSpec {
  std::string name;
  std::string source;
  std::vector<double> edges;
  std::vector<std::string> labels;

  const std::string& label_for(double value) const;
};

struct AttributeSchema {
  std::vector<ColumnSpec> columns;
  std::string label_column;
  std::vector<std::string> group_attributes;
  std::vector<BinSpec> bins;
  // When false, group attributes are not one-hot encoded into the features.
  bool group_features = true;

  const ColumnSpec* find(std::string_view name) const;
  bool is_group_attribute(std::string_view name) const;

  // Throws SchemaError describing the first broken invariant.
  void validate() const;

  static AttributeSchema from_json(const json& doc);
  json to_json() const;
};

// A row as seen by predictors: encoded features plus the categorical codes
// used by group predicates (indexed by categorical column position).
struct ExampleView {
  std::span<const double> features;
  std::span<const int32_t> categories;
};

// Immutable tabular sample. Columns follow the resolved schema: every
// categorical column has a concrete category list and bins appear as derived
// categorical columns.
class Dataset {
 public:
  Dataset() = default;

  // Rows hold one string cell per non-derived schema column, in schema order.
  static Dataset from_rows(AttributeSchema schema,
                           const std::vector<std::vector<std::string>>& rows,
                           std::size_t first_line = 2);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }

  const AttributeSchema& schema() const { return schema_; }

  std::size_t num_features() const { return feature_names_.size(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::span<const double> features(std::size_t row) const;

  std::size_t num_categorical() const { return categorical_columns_.size(); }
  // Position of a categorical column among categorical columns, or -1.
  int categorical_index(std::string_view name) const;
  const std::string& categorical_name(std::size_t index) const;
  const std::vector<std::string>& category_names(std::size_t index) const;
  // Code of `category` in categorical column `index`, or -1 when absent.
  int32_t category_code(std::size_t index, std::string_view category) const;
  std::span<const int32_t> categories(std::size_t row) const;

  std::span<const uint8_t> labels() const { return labels_; }
  uint8_t label(std::size_t row) const { return labels_[row]; }

  ExampleView example(std::size_t row) const {
    return {features(row), categories(row)};
  }

  Dataset subset(std::span<const std::size_t> rows) const;

  // String cells of a row in the same layout accepted by from_rows.
  std::vector<std::string> raw_row(std::size_t row) const;

  // Stable 64-bit digest of schema and contents, rendered as hex.
  std::string fingerprint() const;

 private:
  void build_features();

  AttributeSchema schema_;
  std::vector<std::size_t> categorical_columns_;  // schema column indices
  std::vector<std::size_t> numeric_columns_;
  std::vector<int32_t> codes_;      // size() x num_categorical()
  std::vector<double> numeric_;     // size() x numeric_columns_.size()
  std::vector<uint8_t> labels_;
  std::vector<std::string> feature_names_;
  std::vector<double> features_;    // size() x num_features()
};

Dataset load_csv(const std::filesystem::path& path, const AttributeSchema& schema);
void write_csv(const Dataset& ds, const std::filesystem::path& path);

struct SplitSpec {
  double test_fraction = 0.2;
  uint64_t seed = 0;
  uint32_t trial_index = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Row indices of the partition; both lists ascending.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// Planted per-leaf label rules used for fixtures and the `synth` command.
struct LeafRule {
  enum class Kind { kConstant, kLinear };
  Kind kind = Kind::kConstant;
  int label = 0;                 // constant rule
  std::vector<double> weights;   // linear rule: y = 1{w.x + bias >= 0}
  double bias = 0.0;

  int apply(std::span<const double> x) const;
};

struct PlantedLeaf {
  std::vector<std::pair<std::string, std::string>> groups;  // attribute -> category
  std::size_t count = 0;
  LeafRule rule;
};

struct PlantedModel {
  std::vector<std::string> attributes;
  std::size_t dim = 2;
  double noise = 0.0;
  std::vector<PlantedLeaf> leaves;

  static PlantedModel from_json(const json& doc);
  json to_json() const;
};

struct SyntheticDataset {
  Dataset data;
  std::vector<uint8_t> planted;   // noise-free label of each row
  std::vector<std::size_t> leaf;  // index into PlantedModel::leaves
};

// Features are drawn uniformly from [-1, 1]^dim; each label is flipped with
// probability `noise`.
SyntheticDataset make_synthetic(const PlantedModel& model, uint64_t seed);
AttributeSchema synthetic_schema(const PlantedModel& model);

// Deterministic 64-bit stream seeding from (seed, index).
uint64_t mix_seed(uint64_t seed, uint64_t index);

}  // namespace mgl
