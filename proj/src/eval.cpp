#include "mgl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <set>

#include "mgl/error.hpp"

namespace mgl {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kErm: return "erm";
    case Method::kGroupErm: return "group_erm";
    case Method::kPrepend: return "prepend";
    case Method::kMglTree: return "mgl_tree";
    case Method::kDecoupled: return "decoupled";
  }
  return "erm";
}

Method method_from_string(std::string_view s) {
  for (Method m : all_methods()) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

std::vector<Method> all_methods() {
  return {Method::kErm, Method::kGroupErm, Method::kPrepend, Method::kMglTree, Method::kDecoupled};
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (learners.empty()) throw ConfigError("at least one learner is required");
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  std::set<std::string> names;
  for (const auto& l : learners) {
    l.validate();
    if (!names.insert(l.name()).second) throw ConfigError("two learners share the label '" + l.name() + "'");
  }
  std::set<Method> seen;
  for (Method m : methods) {
    if (!seen.insert(m).second) throw ConfigError("method '" + std::string(to_string(m)) + "' listed twice");
  }
  epsilon.validate();
}

json ExperimentConfig::to_json() const {
  json l = json::array();
  for (const auto& s : learners) l.push_back(s.to_json());
  json m = json::array();
  for (Method x : methods) m.push_back(std::string(to_string(x)));
  return {{"hierarchy", hierarchy.to_json()},
          {"learners", l},
          {"epsilon", epsilon.to_json()},
          {"loss", loss.to_json()},
          {"trials", trials},
          {"split", {{"test_fraction", test_fraction}, {"seed", seed}}},
          {"methods", m},
          {"prepend_cap", prepend_cap},
          {"decoupled_fallback", decoupled_fallback == Fallback::kRoot ? "root" : "error"}};
}

std::pair<std::optional<double>, double> mean_and_stderr(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  std::size_t k = 0;
  for (const auto& v : values) {
    if (!v) continue;
    sum += *v;
    ++k;
  }
  if (k == 0) return {std::nullopt, 0.0};
  const double mean = sum / static_cast<double>(k);
  if (k < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const auto& v : values) {
    if (v) ss += (*v - mean) * (*v - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(k - 1));
  return {mean, sd / std::sqrt(static_cast<double>(k))};
}

namespace {

struct TrialResult {
  // [learner][method][node]
  std::vector<std::vector<std::vector<std::optional<double>>>> errors;
  std::vector<std::size_t> test_counts;
  std::vector<json> summaries;  // per learner
};

std::optional<double> zero_one_error(const Predictor& f, const Dataset& test, std::span<const uint32_t> rows) {
  static const Loss kZeroOne{LossKind::kZeroOne};
  return rows_risk(f, test, rows, kZeroOne).value;
}

TrialResult run_trial(const ExperimentConfig& cfg, const Dataset& data, std::shared_ptr<const GroupTree> tree,
                      std::size_t trial) {
  const auto parts = split(data, SplitSpec{cfg.test_fraction, cfg.seed, static_cast<uint32_t>(trial)});
  const Dataset& train = parts.first;
  const Dataset& test = parts.second;
  const auto test_rows = node_rows(*tree, test);
  const std::size_t n_nodes = tree->size();

  TrialResult out;
  for (const auto& r : test_rows) out.test_counts.push_back(r.size());
  for (const auto& spec : cfg.learners) {
    std::vector<std::vector<std::optional<double>>> per_method;
    json summary = json::object();
    const GroupErmCache cache(spec, train, tree);
    for (Method m : cfg.methods) {
      std::vector<std::optional<double>> err(n_nodes);
      try {
        auto evaluate_all = [&](const Predictor& f) {
          for (std::size_t g = 0; g < n_nodes; ++g) err[g] = zero_one_error(f, test, test_rows[g]);
        };
        switch (m) {
          case Method::kErm:
            evaluate_all(*cache.erm());
            break;
          case Method::kGroupErm:
            for (std::size_t g = 0; g < n_nodes; ++g) {
              // Nearest ancestor with training data stands in for an empty group.
              std::size_t src = g;
              while (!cache.predictor(src)) src = static_cast<std::size_t>(tree->parent(src));
              err[g] = zero_one_error(*cache.predictor(src), test, test_rows[g]);
            }
            break;
          case Method::kPrepend: {
            const DecisionList list = prepend(cache, cfg.epsilon, cfg.loss, cfg.prepend_cap);
            evaluate_all(list);
            summary["prepend"] = {{"entries", list.size()}};
            break;
          }
          case Method::kMglTree: {
            const TreePredictor f = mgl_tree(cache, cfg.epsilon, cfg.loss);
            evaluate_all(f);
            std::size_t updated = 0, inherited = 0, empty = 0;
            for (const auto& t : f.trace()) {
              updated += t.decision == NodeDecision::kUpdated;
              inherited += t.decision == NodeDecision::kInherited;
              empty += t.decision == NodeDecision::kEmpty;
            }
            const auto violations = multigroup_violations(f, cache, cfg.epsilon, cfg.loss);
            summary["mgl_tree"] = {{"updated", updated},
                                   {"inherited", inherited},
                                   {"inherited_empty", empty},
                                   {"train_inequality_violations", violations.size()}};
            break;
          }
          case Method::kDecoupled:
            evaluate_all(decoupled(cache, cfg.decoupled_fallback));
            break;
        }
      } catch (const std::exception& e) {
        throw Error("trial " + std::to_string(trial) + ", method " + std::string(to_string(m)) + ", learner " +
                    spec.name() + ": " + e.what());
      }
      per_method.push_back(std::move(err));
    }
    out.errors.push_back(std::move(per_method));
    out.summaries.push_back(std::move(summary));
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

EvalReport run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  if (data.size() < 2) throw ValueError("dataset needs at least two rows");
  auto tree = std::make_shared<const GroupTree>(cfg.hierarchy.build(data));

  std::vector<TrialResult> results(cfg.trials);
  std::exception_ptr failure;
  const auto trials = static_cast<std::ptrdiff_t>(cfg.trials);
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs) if (cfg.jobs > 1)
  for (std::ptrdiff_t t = 0; t < trials; ++t) {
    try {
      results[static_cast<std::size_t>(t)] = run_trial(cfg, data, tree, static_cast<std::size_t>(t));
    } catch (...) {
#pragma omp critical(mgl_trial_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  EvalReport report;
  report.config = cfg.to_json();
  for (std::size_t l = 0; l < cfg.learners.size(); ++l) {
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      for (std::size_t g = 0; g < tree->size(); ++g) {
        ReportRow row;
        row.method = std::string(to_string(cfg.methods[mi]));
        row.learner = cfg.learners[l].name();
        row.group_id = tree->group(g).id;
        row.depth = tree->depth(g);
        double n_sum = 0.0;
        for (const auto& r : results) {
          row.per_trial.push_back(r.errors[l][mi][g]);
          row.n_g_per_trial.push_back(r.test_counts[g]);
          n_sum += static_cast<double>(r.test_counts[g]);
          row.trials_present += r.errors[l][mi][g].has_value();
        }
        row.mean_n_g = n_sum / static_cast<double>(results.size());
        std::tie(row.mean_error, row.stderr_error) = mean_and_stderr(row.per_trial);
        report.rows.push_back(std::move(row));
      }
    }
  }
  for (std::size_t t = 0; t < results.size(); ++t) {
    for (std::size_t l = 0; l < cfg.learners.size(); ++l) {
      report.summaries.push_back({t, cfg.learners[l].name(), results[t].summaries[l]});
    }
  }
  return report;
}

const ReportRow* EvalReport::find(std::string_view method, std::string_view learner, std::string_view group) const {
  for (const auto& r : rows) {
    if (r.method == method && r.learner == learner && r.group_id == group) return &r;
  }
  return nullptr;
}

std::optional<double> EvalReport::worst_group_error(std::string_view method, std::string_view learner) const {
  std::optional<double> worst;
  for (const auto& r : rows) {
    if (r.method != method || r.learner != learner || !r.mean_error) continue;
    if (!worst || *r.mean_error > *worst) worst = r.mean_error;
  }
  return worst;
}

std::string EvalReport::to_csv() const {
  std::string out = "method,learner,group_id,depth,mean_error,stderr,mean_n_g,trials_present\n";
  for (const auto& r : rows) {
    out += csv_field(r.method) + "," + csv_field(r.learner) + "," + csv_field(r.group_id) + "," +
           std::to_string(r.depth) + "," + (r.mean_error ? format_number(*r.mean_error) : "") + "," +
           format_number(r.stderr_error) + "," + format_number(r.mean_n_g) + "," + std::to_string(r.trials_present) +
           "\n";
  }
  return out;
}

json EvalReport::to_json() const {
  json rows_doc = json::array();
  for (const auto& r : rows) {
    json trials = json::array();
    for (const auto& v : r.per_trial) trials.push_back(v ? json(*v) : json(nullptr));
    rows_doc.push_back({{"method", r.method},
                        {"learner", r.learner},
                        {"group_id", r.group_id},
                        {"depth", r.depth},
                        {"mean_error", r.mean_error ? json(*r.mean_error) : json(nullptr)},
                        {"stderr", r.stderr_error},
                        {"mean_n_g", r.mean_n_g},
                        {"trials_present", r.trials_present},
                        {"per_trial_error", trials},
                        {"per_trial_n_g", r.n_g_per_trial}});
  }
  json summaries_doc = json::array();
  for (const auto& s : summaries) {
    summaries_doc.push_back({{"trial", s.trial}, {"learner", s.learner}, {"details", s.details}});
  }
  return {{"config", config}, {"rows", rows_doc}, {"trace_summaries", summaries_doc}};
}

void EvalReport::write(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  const auto write_file = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write '" + p.string() + "'");
    f << text;
  };
  write_file(dir / "report.csv", to_csv());
  write_file(dir / "report.json", to_json().dump(2) + "\n");
}

std::vector<DeltaRow> compare(const EvalReport& report, std::string_view method_a, std::string_view method_b) {
  std::map<std::pair<std::string, std::string>, const ReportRow*> b_rows;
  bool has_a = false, has_b = false;
  for (const auto& r : report.rows) {
    has_a |= r.method == method_a;
    if (r.method == method_b) {
      has_b = true;
      b_rows[{r.learner, r.group_id}] = &r;
    }
  }
  if (!has_a) throw ValueError("method '" + std::string(method_a) + "' is not in the report");
  if (!has_b) throw ValueError("method '" + std::string(method_b) + "' is not in the report");

  std::vector<DeltaRow> out;
  for (const auto& a : report.rows) {
    if (a.method != method_a) continue;
    const auto it = b_rows.find({a.learner, a.group_id});
    if (it == b_rows.end()) continue;
    const ReportRow& b = *it->second;
    std::vector<std::optional<double>> diffs;
    for (std::size_t t = 0; t < a.per_trial.size() && t < b.per_trial.size(); ++t) {
      if (a.per_trial[t] && b.per_trial[t]) diffs.push_back(*a.per_trial[t] - *b.per_trial[t]);
    }
    DeltaRow d{a.learner, a.group_id, a.mean_error, b.mean_error, std::nullopt, 0.0};
    std::tie(d.delta, d.delta_stderr) = mean_and_stderr(diffs);
    out.push_back(std::move(d));
  }
  std::stable_sort(out.begin(), out.end(), [](const DeltaRow& x, const DeltaRow& y) {
    if (x.delta.has_value() != y.delta.has_value()) return x.delta.has_value();
    return x.delta && *x.delta < *y.delta;
  });
  return out;
}

}  // namespace mgl
