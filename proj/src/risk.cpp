#include "mgl/risk.hpp"

#include <algorithm>

#include "mgl/error.hpp"
#include "mgl/kernels.hpp"
#include "mgl/learners.hpp"

namespace mgl {

double Loss::operator()(int prediction, double score, int label) const {
  if (kind == LossKind::kZeroOne) return prediction != label ? 1.0 : 0.0;
  constexpr double kFloor = 1e-300;
  const double p = label == 1 ? score : 1.0 - score;
  const double logloss = -std::log(std::max(p, kFloor));
  return std::min(1.0, logloss / clip_cap);
}

double Loss::evaluate(const Predictor& f, const ExampleView& x, int label) const {
  if (kind == LossKind::kZeroOne) return f.predict(x) != label ? 1.0 : 0.0;
  return (*this)(0, f.score(x), label);
}

std::string Loss::name() const { return kind == LossKind::kZeroOne ? "zero_one" : "clipped_logistic"; }

Loss Loss::from_json(const json& doc) {
  Loss loss;
  std::string kind;
  if (doc.is_string()) {
    kind = doc.get<std::string>();
  } else if (doc.is_object()) {
    for (const auto& [key, _] : doc.items()) {
      if (key != "kind" && key != "clip_cap") throw ConfigError("unknown loss key '" + key + "'");
    }
    try {
      kind = doc.at("kind").get<std::string>();
      loss.clip_cap = doc.value("clip_cap", loss.clip_cap);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed loss: ") + e.what());
    }
  } else {
    throw ConfigError("loss must be a string or object");
  }
  if (kind == "zero_one") {
    loss.kind = LossKind::kZeroOne;
  } else if (kind == "clipped_logistic") {
    loss.kind = LossKind::kClippedLogistic;
  } else {
    throw ConfigError("unknown loss '" + kind + "'");
  }
  if (!(loss.clip_cap > 0.0)) throw ConfigError("clip_cap must be > 0");
  return loss;
}

json Loss::to_json() const {
  json doc = {{"kind", name()}};
  if (kind == LossKind::kClippedLogistic) doc["clip_cap"] = clip_cap;
  return doc;
}

RiskValue rows_risk(const Predictor& f, const Dataset& ds, std::span<const uint32_t> rows, const Loss& loss) {
  RiskValue r;
  r.support = rows.size();
  if (rows.empty()) return r;
  r.value = kernels::parallel::loss_sum(f, ds, rows, loss) / static_cast<double>(rows.size());
  return r;
}

namespace {

std::vector<uint32_t> mask_rows(std::span<const uint8_t> mask) {
  std::vector<uint32_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(static_cast<uint32_t>(i));
  }
  return rows;
}

}  // namespace

RiskValue empirical_risk(const Predictor& f, const Dataset& ds, const Loss& loss) {
  std::vector<uint32_t> rows(ds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<uint32_t>(i);
  return rows_risk(f, ds, rows, loss);
}

RiskValue group_risk(const Predictor& f, const Dataset& ds, const Group& g, const Loss& loss) {
  return rows_risk(f, ds, mask_rows(membership_vector(g, ds)), loss);
}

double decompose_check(const Predictor& f, const Dataset& ds, std::span<const std::vector<uint8_t>> parts,
                       const Loss& loss) {
  std::vector<int> owner(ds.size(), -1);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].size() != ds.size()) throw ValueError("part mask length does not match dataset size");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (!parts[k][i]) continue;
      if (owner[i] >= 0) {
        throw ValueError("parts " + std::to_string(owner[i]) + " and " + std::to_string(k) + " overlap at row " +
                         std::to_string(i));
      }
      owner[i] = static_cast<int>(k);
    }
  }
  std::vector<uint8_t> all(ds.size(), 0);
  for (std::size_t i = 0; i < ds.size(); ++i) all[i] = owner[i] >= 0;
  const RiskValue whole = rows_risk(f, ds, mask_rows(all), loss);
  if (whole.absent()) return 0.0;
  double weighted = 0.0;
  for (const auto& part : parts) {
    const RiskValue r = rows_risk(f, ds, mask_rows(part), loss);
    if (r.absent()) continue;
    weighted += static_cast<double>(r.support) / static_cast<double>(whole.support) * *r.value;
  }
  return std::abs(*whole.value - weighted);
}

double decompose_check(const Predictor& f, const Dataset& ds, std::span<const Group> parts, const Loss& loss) {
  std::vector<std::vector<uint8_t>> masks;
  masks.reserve(parts.size());
  for (const auto& g : parts) masks.push_back(membership_vector(g, ds));
  try {
    return decompose_check(f, ds, std::span<const std::vector<uint8_t>>(masks), loss);
  } catch (const ValueError& e) {
    // Re-label the overlap with group ids.
    for (std::size_t a = 0; a < parts.size(); ++a) {
      for (std::size_t b = a + 1; b < parts.size(); ++b) {
        for (std::size_t i = 0; i < ds.size(); ++i) {
          if (masks[a][i] && masks[b][i]) {
            throw ValueError("groups '" + parts[a].id + "' and '" + parts[b].id + "' overlap at row " +
                             std::to_string(i));
          }
        }
      }
    }
    throw;
  }
}

}  // namespace mgl
