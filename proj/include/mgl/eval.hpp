#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mgl/algorithms.hpp"
#include "mgl/bounds.hpp"
#include "mgl/data.hpp"
#include "mgl/groups.hpp"
#include "mgl/learners.hpp"
#include "mgl/risk.hpp"

namespace mgl {

enum class Method { kErm, kGroupErm, kPrepend, kMglTree, kDecoupled };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);
std::vector<Method> all_methods();

struct ExperimentConfig {
  HierarchySpec hierarchy;
  std::vector<LearnerSpec> learners;
  EpsilonSpec epsilon;
  Loss loss;
  std::size_t trials = 10;
  double test_fraction = 0.2;
  uint64_t seed = 0;
  std::vector<Method> methods = all_methods();
  std::size_t prepend_cap = 0;  // 0: 4 * |G|
  Fallback decoupled_fallback = Fallback::kRoot;
  int jobs = 1;

  void validate() const;
  json to_json() const;
};

struct ReportRow {
  std::string method;
  std::string learner;
  std::string group_id;
  std::size_t depth = 0;
  std::optional<double> mean_error;
  double stderr_error = 0.0;
  double mean_n_g = 0.0;
  std::size_t trials_present = 0;
  std::vector<std::optional<double>> per_trial;
  std::vector<std::size_t> n_g_per_trial;
};

// Per trial, per learner: counts describing what the methods did.
struct TrialSummary {
  std::size_t trial = 0;
  std::string learner;
  json details;
};

struct EvalReport {
  json config;
  std::vector<ReportRow> rows;
  std::vector<TrialSummary> summaries;

  const ReportRow* find(std::string_view method, std::string_view learner, std::string_view group) const;
  // Largest mean error over groups for one (method, learner).
  std::optional<double> worst_group_error(std::string_view method, std::string_view learner) const;

  std::string to_csv() const;
  json to_json() const;
  // Writes report.csv and report.json into `dir`.
  void write(const std::filesystem::path& dir) const;
};

// Per trial: split, fit every (learner, method) on train, and record the
// zero-one error on the test rows of every hierarchy node. Trials run on up
// to cfg.jobs threads; the report does not depend on the thread count.
EvalReport run_experiment(const ExperimentConfig& cfg, const Dataset& data);

struct DeltaRow {
  std::string learner;
  std::string group_id;
  std::optional<double> error_a;
  std::optional<double> error_b;
  std::optional<double> delta;  // mean over trials of error_a - error_b
  double delta_stderr = 0.0;
};

// Sorted by delta ascending; groups lacking a paired trial sort last.
std::vector<DeltaRow> compare(const EvalReport& report, std::string_view method_a, std::string_view method_b);

// Mean and standard error (sample standard deviation / sqrt(k)) of the
// present values; standard error is 0 when fewer than two are present.
std::pair<std::optional<double>, double> mean_and_stderr(const std::vector<std::optional<double>>& values);

}  // namespace mgl
