#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgl/data.hpp"
#include "mgl/groups.hpp"

namespace mgl {

class Predictor;

enum class LossKind { kZeroOne, kClippedLogistic };

// Bounded loss with range [0, 1].
struct Loss {
  LossKind kind = LossKind::kZeroOne;
  // clipped_logistic = min(1, logloss(score, y) / clip_cap)
  double clip_cap = std::log(1e3);

  double operator()(int prediction, double score, int label) const;
  double evaluate(const Predictor& f, const ExampleView& x, int label) const;

  std::string name() const;
  static Loss from_json(const json& doc);
  json to_json() const;
};

// Mean loss over a set of rows; no value when the set is empty.
struct RiskValue {
  std::optional<double> value;
  std::size_t support = 0;

  bool absent() const { return !value.has_value(); }
};

RiskValue empirical_risk(const Predictor& f, const Dataset& ds, const Loss& loss);
RiskValue group_risk(const Predictor& f, const Dataset& ds, const Group& g, const Loss& loss);
RiskValue rows_risk(const Predictor& f, const Dataset& ds, std::span<const uint32_t> rows, const Loss& loss);

// |L(f | union) - sum_k (n_k / n_union) L(f | part_k)| for pairwise disjoint
// row masks. Throws ValueError naming the first overlapping pair.
double decompose_check(const Predictor& f, const Dataset& ds, std::span<const std::vector<uint8_t>> parts,
                       const Loss& loss);
double decompose_check(const Predictor& f, const Dataset& ds, std::span<const Group> parts, const Loss& loss);

}  // namespace mgl
