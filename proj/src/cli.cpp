#include "mgl/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <sstream>

#include "mgl/algorithms.hpp"
#include "mgl/config.hpp"
#include "mgl/error.hpp"
#include "mgl/eval.hpp"

namespace mgl {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsageFailure = 2;

// Domain failures detected while the command runs.
struct DomainFailure : Error {
  using Error::Error;
};

struct CommonOptions {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  int jobs = 1;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("-"); }

fs::path output_dir(const CommonOptions& opt, const RunConfigFile& cfg) {
  if (!opt.out.empty()) return opt.out;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return "out";
}

// Data problems during train/evaluate are domain failures.
Dataset load_run_data(const RunConfigFile& cfg) {
  try {
    return load_csv(cfg.data_path, cfg.schema);
  } catch (const Error& e) {
    throw DomainFailure(e.what());
  }
}

int cmd_validate_hierarchy(const CommonOptions& opt, std::ostream& out) {
  const RunConfigFile cfg = RunConfigFile::load(opt.config, opt.overrides);
  Dataset data;
  if (fs::exists(cfg.data_path)) {
    data = load_csv(cfg.data_path, cfg.schema);
  } else {
    data = Dataset::from_rows(cfg.schema, {});
  }
  const auto groups = cfg.experiment.hierarchy.groups(data);
  const HierarchyVerdict verdict = validate_hierarchical(groups, data.empty() ? nullptr : &data);
  if (verdict.valid) {
    out << "VALID (" << groups.size() << " groups including the root)\n";
    return kOk;
  }
  out << "INVALID\n";
  for (const auto& v : verdict.violations) {
    out << "  (" << v.first << ", " << v.second << "): " << v.reason << "\n";
  }
  return kDomainFailure;
}

json model_envelope(const std::string& method, const LearnerSpec& spec, const EpsilonSpec& eps, const Loss& loss,
                    const Dataset& train, const GroupTree& tree, json model) {
  return {{"format", "mgl-model"},
          {"version", 1},
          {"method", method},
          {"learner", spec.to_json()},
          {"epsilon", eps.to_json()},
          {"loss", loss.to_json()},
          {"schema", train.schema().to_json()},
          {"hierarchy", tree.to_json()},
          {"training", {{"fingerprint", train.fingerprint()}, {"n", train.size()}}},
          {"model", std::move(model)}};
}

int cmd_train(const CommonOptions& opt, std::ostream& out) {
  const RunConfigFile cfg = RunConfigFile::load(opt.config, opt.overrides);
  const Dataset train = load_run_data(cfg);
  if (train.empty()) throw DomainFailure("training dataset '" + cfg.data_path.string() + "' is empty");
  const auto& ex = cfg.experiment;
  auto tree = std::make_shared<const GroupTree>(ex.hierarchy.build(train));
  const EpsilonSpec eps = ex.epsilon.resolved(tree->size(), train.size());
  const fs::path dir = output_dir(opt, cfg);

  for (const auto& spec : ex.learners) {
    const GroupErmCache cache(spec, train, tree);
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> risks;
    for (Method m : ex.methods) {
      const std::string method(to_string(m));
      json model;
      std::vector<std::optional<double>> col(tree->size());
      auto risk_all = [&](const Predictor& f) {
        for (std::size_t g = 0; g < tree->size(); ++g) col[g] = rows_risk(f, train, cache.rows(g), ex.loss).value;
      };
      switch (m) {
        case Method::kErm:
          model = {{"type", "erm"}, {"predictor", cache.erm()->to_json()}};
          risk_all(*cache.erm());
          break;
        case Method::kGroupErm: {
          json groups = json::array();
          for (std::size_t g = 0; g < tree->size(); ++g) {
            const auto& p = cache.predictor(g);
            groups.push_back({{"group", tree->group(g).id}, {"predictor", p ? p->to_json() : json(nullptr)}});
            if (p) col[g] = rows_risk(*p, train, cache.rows(g), ex.loss).value;
          }
          model = {{"type", "group_erm"}, {"groups", groups}};
          break;
        }
        case Method::kPrepend: {
          try {
            const DecisionList list = prepend(cache, eps, ex.loss, ex.prepend_cap);
            model = list.to_json();
            risk_all(list);
          } catch (const PrependCapError& e) {
            throw DomainFailure(std::string(e.what()) + " (partial list has " + std::to_string(e.partial().size()) +
                                " entries)");
          }
          break;
        }
        case Method::kMglTree: {
          const TreePredictor f = mgl_tree(cache, eps, ex.loss);
          model = f.to_json();
          risk_all(f);
          write_text(dir / ("trace_" + spec.name() + ".jsonl"), trace_to_jsonl(f.trace()));
          break;
        }
        case Method::kDecoupled: {
          const PartitionPredictor f = decoupled(cache, ex.decoupled_fallback);
          model = f.to_json();
          risk_all(f);
          break;
        }
      }
      write_text(dir / ("model_" + method + "_" + spec.name() + ".json"),
                 model_envelope(method, spec, eps, ex.loss, train, *tree, std::move(model)).dump(2) + "\n");
      columns.push_back(method);
      risks.push_back(std::move(col));
    }

    out << "learner " << spec.name() << ", training " << ex.loss.name() << " risk per group\n";
    out << "group\tdepth\tn_g";
    for (const auto& c : columns) out << "\t" << c;
    out << "\n";
    for (std::size_t g = 0; g < tree->size(); ++g) {
      out << tree->group(g).id << "\t" << tree->depth(g) << "\t" << cache.count(g);
      for (const auto& col : risks) out << "\t" << fmt(col[g]);
      out << "\n";
    }
  }
  out << "wrote models to " << dir.string() << "\n";
  return kOk;
}

int cmd_evaluate(const CommonOptions& opt, std::ostream& out) {
  RunConfigFile cfg = RunConfigFile::load(opt.config, opt.overrides);
  cfg.experiment.jobs = opt.jobs;
  const Dataset data = load_run_data(cfg);
  EvalReport report;
  try {
    report = run_experiment(cfg.experiment, data);
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw DomainFailure(e.what());
  }
  const fs::path dir = output_dir(opt, cfg);
  report.write(dir);
  out << "worst-group test error (mean over " << cfg.experiment.trials << " trials)\n";
  for (const auto& spec : cfg.experiment.learners) {
    for (Method m : cfg.experiment.methods) {
      out << "  " << to_string(m) << "\t" << spec.name() << "\t"
          << fmt(report.worst_group_error(to_string(m), spec.name())) << "\n";
    }
  }
  out << "wrote " << (dir / "report.csv").string() << " and " << (dir / "report.json").string() << "\n";
  return kOk;
}

int cmd_audit(const std::string& model_path, const std::string& data_path, const std::string& trace_path,
              std::ostream& out) {
  const json doc = read_json_file(model_path);
  if (!doc.is_object() || doc.value("format", "") != "mgl-model") {
    throw ConfigError("'" + model_path + "' is not a model file");
  }
  AttributeSchema schema;
  LearnerSpec spec;
  EpsilonSpec eps;
  Loss loss;
  std::vector<Group> groups;
  std::string method, fingerprint;
  try {
    schema = AttributeSchema::from_json(doc.at("schema"));
    spec = LearnerSpec::from_json(doc.at("learner"));
    eps = EpsilonSpec::from_json(doc.at("epsilon"));
    loss = Loss::from_json(doc.at("loss"));
    for (const auto& n : doc.at("hierarchy").at("nodes")) groups.push_back(Group::from_json(n));
    method = doc.at("method").get<std::string>();
    fingerprint = doc.at("training").at("fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
  const Dataset train = load_csv(data_path, schema);
  if (train.fingerprint() != fingerprint) {
    throw MismatchError("dataset '" + data_path + "' is not the data the model was trained on");
  }
  auto tree = std::make_shared<const GroupTree>(GroupTree::from_groups(groups, train));
  const GroupErmCache cache(spec, train, tree);

  std::vector<AuditViolation> violations;
  if (method == "mgl_tree") {
    const TreePredictor f = TreePredictor::from_json(doc.at("model"), tree);
    std::vector<TraceEntry> trace = f.trace();
    if (!trace_path.empty()) trace = trace_from_jsonl(read_text(trace_path));
    const AuditVerdict replay = monotonicity_audit(trace, cache, eps, loss);
    out << "replayed " << replay.steps << " steps\n";
    violations = replay.violations;
    for (auto& v : working_predictor_mismatches(f, cache)) violations.push_back(std::move(v));
    for (auto& v : multigroup_violations(f, cache, eps, loss)) violations.push_back(std::move(v));
  } else if (method == "prepend") {
    const DecisionList f = DecisionList::from_json(doc.at("model"), tree);
    for (const auto& v : prepend_violations(f, cache, eps, loss)) {
      violations.push_back({0, v.group_id, "stopping test (hypothesis " + v.hypothesis_id + ")", v.value, 0.0});
    }
  } else {
    throw ConfigError("audit supports mgl_tree and prepend models, not '" + method + "'");
  }

  if (violations.empty()) {
    out << "CLEAN: no violations\n";
    return kOk;
  }
  out << "VIOLATIONS: " << violations.size() << "\n";
  for (const auto& v : violations) {
    out << "  step " << v.step << "\t" << v.group_id << "\t" << v.kind << "\tlhs=" << v.lhs << "\trhs=" << v.rhs
        << "\n";
  }
  return kDomainFailure;
}

int cmd_synth(const std::string& spec_path, uint64_t seed, const std::string& out_path,
              const std::string& schema_path, std::ostream& out) {
  const PlantedModel model = PlantedModel::from_json(read_json_file(spec_path));
  const SyntheticDataset synth = make_synthetic(model, seed);
  write_csv(synth.data, out_path);
  fs::path schema_out = schema_path;
  if (schema_out.empty()) schema_out = fs::path(out_path).replace_extension(".schema.json");
  write_text(schema_out, synthetic_schema(model).to_json().dump(2) + "\n");
  out << "wrote " << synth.data.size() << " rows to " << out_path << " and schema to " << schema_out.string()
      << "\n";
  return kOk;
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_out, bool with_jobs) {
  cmd->add_option("--config", opt.config, "Run configuration JSON")->required();
  cmd->add_option("--set", opt.overrides, "Override a config value, e.g. epsilon.c=0.5")->take_all();
  if (with_out) cmd->add_option("--out", opt.out, "Output directory");
  if (with_jobs) cmd->add_option("--jobs", opt.jobs, "Trials run concurrently")->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-group learning over hierarchical groups", "mglearn"};
  app.require_subcommand(1);

  CommonOptions validate_opt, train_opt, eval_opt;
  auto* validate = app.add_subcommand("validate-hierarchy", "Check that the configured groups are hierarchical");
  add_common(validate, validate_opt, false, false);
  auto* train = app.add_subcommand("train", "Fit every configured method and write models and traces");
  add_common(train, train_opt, true, false);
  auto* evaluate = app.add_subcommand("evaluate", "Run repeated train/test trials and write a report");
  add_common(evaluate, eval_opt, true, true);

  std::string model_path, data_path, trace_path;
  auto* audit = app.add_subcommand("audit", "Replay a trained model against its training data");
  audit->add_option("--model", model_path, "Model JSON written by train")->required();
  audit->add_option("--data", data_path, "Training data CSV")->required();
  audit->add_option("--trace", trace_path, "Trace JSONL to replay instead of the embedded one");

  std::string spec_path, synth_out, schema_out;
  uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic fixture CSV from a planted model");
  synth->add_option("--spec", spec_path, "Planted model JSON")->required();
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--out", synth_out, "Output CSV")->required();
  synth->add_option("--schema", schema_out, "Output schema JSON (default: the output path with extension .schema.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e_stream;
    const int code = app.exit(e, o, e_stream);
    out << o.str();
    err << e_stream.str();
    return code == 0 ? kOk : kUsageFailure;
  }

  try {
    if (*validate) return cmd_validate_hierarchy(validate_opt, out);
    if (*train) return cmd_train(train_opt, out);
    if (*evaluate) return cmd_evaluate(eval_opt, out);
    if (*audit) return cmd_audit(model_path, data_path, trace_path, out);
    if (*synth) return cmd_synth(spec_path, seed, synth_out, schema_out, out);
  } catch (const DomainFailure& e) {
    err << "error: " << e.what() << "\n";
    return kDomainFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageFailure;
  }
  return kUsageFailure;
}

}  // namespace mgl
