#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mgl/data.hpp"
#include "mgl/eval.hpp"

namespace mgl {

// Run configuration as read from JSON. Relative paths resolve against the
// directory of the config file.
//
//   {
//     "data": "train.csv",
//     "schema": {...} | "schema.json",
//     "hierarchy": {...} | "hierarchy.json",
//     "learners": [{"kind": "tree", "max_depth": 2}],
//     "epsilon": {"kind": "scaled", "c": 1.0},
//     "loss": "zero_one",
//     "split": {"test_fraction": 0.2, "seed": 7},
//     "trials": 10,
//     "methods": ["erm", "group_erm", "prepend", "mgl_tree", "decoupled"],
//     "prepend_cap": 0,
//     "decoupled_fallback": "root",
//     "output_dir": "out"
//   }
struct RunConfigFile {
  std::filesystem::path data_path;
  AttributeSchema schema;
  ExperimentConfig experiment;
  std::filesystem::path output_dir;

  static RunConfigFile from_json(const json& doc, const std::filesystem::path& base_dir);
  // Reads the file, applies "key.sub=value" overrides, then validates.
  static RunConfigFile load(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
};

// Sets a dotted path ("epsilon.c", "learners.0.max_depth") inside `doc`.
// The value is parsed as JSON when possible, else taken as a string.
void apply_override(json& doc, const std::string& assignment);

json read_json_file(const std::filesystem::path& path);

}  // namespace mgl
