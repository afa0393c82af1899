#include "mgl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mgl/error.hpp"

namespace mgl {

namespace {

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

// An inline object/array or the path of a JSON file holding it.
json inline_or_file(const json& v, const std::filesystem::path& base) {
  if (v.is_string()) return read_json_file(resolve_path(base, v.get<std::string>()));
  return v;
}

bool is_index(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    json* next;
    if (node->is_array() && is_index(part)) {
      const auto i = std::stoul(part);
      if (i >= node->size()) throw ConfigError("override index " + part + " out of range in '" + key + "'");
      next = &(*node)[i];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

RunConfigFile RunConfigFile::from_json(const json& doc, const std::filesystem::path& base_dir) {
  static const std::set<std::string> kKeys = {"data",   "schema",      "hierarchy",   "learners",
                                              "epsilon", "loss",       "split",       "trials",
                                              "methods", "prepend_cap", "decoupled_fallback", "output_dir"};
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  for (const char* required : {"data", "schema", "hierarchy", "learners"}) {
    if (!doc.contains(required)) throw ConfigError(std::string("config is missing '") + required + "'");
  }
  RunConfigFile cfg;
  try {
    cfg.data_path = resolve_path(base_dir, doc.at("data").get<std::string>());
    cfg.schema = AttributeSchema::from_json(inline_or_file(doc.at("schema"), base_dir));
    cfg.experiment.hierarchy = HierarchySpec::from_json(inline_or_file(doc.at("hierarchy"), base_dir));

    const json learners = doc.at("learners");
    if (learners.is_array()) {
      for (const auto& l : learners) cfg.experiment.learners.push_back(LearnerSpec::from_json(l));
    } else {
      cfg.experiment.learners.push_back(LearnerSpec::from_json(learners));
    }
    if (doc.contains("epsilon")) cfg.experiment.epsilon = EpsilonSpec::from_json(doc.at("epsilon"));
    if (doc.contains("loss")) cfg.experiment.loss = Loss::from_json(doc.at("loss"));
    if (doc.contains("split")) {
      const auto& s = doc.at("split");
      for (const auto& [key, _] : s.items()) {
        if (key != "test_fraction" && key != "seed") throw ConfigError("unknown split key '" + key + "'");
      }
      cfg.experiment.test_fraction = s.value("test_fraction", cfg.experiment.test_fraction);
      cfg.experiment.seed = s.value("seed", cfg.experiment.seed);
    }
    cfg.experiment.trials = doc.value("trials", cfg.experiment.trials);
    if (doc.contains("methods")) {
      cfg.experiment.methods.clear();
      for (const auto& m : doc.at("methods")) cfg.experiment.methods.push_back(method_from_string(m.get<std::string>()));
    }
    cfg.experiment.prepend_cap = doc.value("prepend_cap", cfg.experiment.prepend_cap);
    if (doc.contains("decoupled_fallback")) {
      const auto fb = doc.at("decoupled_fallback").get<std::string>();
      if (fb == "root") {
        cfg.experiment.decoupled_fallback = Fallback::kRoot;
      } else if (fb == "error") {
        cfg.experiment.decoupled_fallback = Fallback::kError;
      } else {
        throw ConfigError("decoupled_fallback must be 'root' or 'error'");
      }
    }
    if (doc.contains("output_dir")) cfg.output_dir = resolve_path(base_dir, doc.at("output_dir").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  cfg.schema.validate();
  cfg.experiment.validate();
  return cfg;
}

RunConfigFile RunConfigFile::load(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json doc = read_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc, path.parent_path());
}

}  // namespace mgl
