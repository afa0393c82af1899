#include "mgl/bounds.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "mgl/error.hpp"

namespace mgl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double finite_h_bracket(const EpsilonSpec& s) {
  return 2.0 * std::log(s.g_size * s.h_size) + std::log(8.0 / s.delta);
}

void require_resolved(const EpsilonSpec& s, bool needs_n) {
  if (!(s.g_size >= 1.0)) throw ConfigError("epsilon: |G| must be >= 1 (resolve it against a tree first)");
  if (needs_n && !(s.n_total >= 1.0)) throw ConfigError("epsilon: n must be >= 1 (resolve it against data first)");
}

}  // namespace

void EpsilonSpec::validate() const {
  if (kind == EpsilonKind::kConstant) {
    if (std::isnan(value) || value < 0.0) throw ConfigError("epsilon constant must be >= 0");
    return;
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("epsilon delta must lie in (0, 1)");
  if (std::isnan(scale) || scale < 0.0) throw ConfigError("epsilon scale c must be >= 0");
  if (!(h_size >= 1.0)) throw ConfigError("epsilon |H| must be >= 1");
  if (!(vc_dim >= 1.0)) throw ConfigError("epsilon VC dimension must be >= 1");
  if (g_size != 0.0 && !(g_size >= 1.0)) throw ConfigError("epsilon |G| must be >= 1");
  if (n_total != 0.0 && !(n_total >= 1.0)) throw ConfigError("epsilon n must be >= 1");
}

EpsilonSpec EpsilonSpec::resolved(std::size_t groups, std::size_t n) const {
  EpsilonSpec s = *this;
  if (s.g_size == 0.0) s.g_size = static_cast<double>(groups);
  if (s.n_total == 0.0) s.n_total = static_cast<double>(n);
  return s;
}

std::string EpsilonSpec::name() const {
  switch (kind) {
    case EpsilonKind::kFiniteH: return "finite_H";
    case EpsilonKind::kVc: return "vc";
    case EpsilonKind::kConstant: return "constant";
    case EpsilonKind::kScaled: return "scaled";
  }
  return "scaled";
}

EpsilonSpec EpsilonSpec::constant(double v) {
  EpsilonSpec s;
  s.kind = EpsilonKind::kConstant;
  s.value = v;
  return s;
}

EpsilonSpec EpsilonSpec::from_json(const json& doc) {
  static const std::set<std::string> kKeys = {"kind", "h_size", "vc_dim", "delta", "g_size", "n", "c", "value"};
  if (!doc.is_object()) throw ConfigError("epsilon must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown epsilon key '" + key + "'");
  }
  EpsilonSpec s;
  try {
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "finite_H") {
      s.kind = EpsilonKind::kFiniteH;
    } else if (kind == "vc") {
      s.kind = EpsilonKind::kVc;
    } else if (kind == "constant") {
      s.kind = EpsilonKind::kConstant;
    } else if (kind == "scaled") {
      s.kind = EpsilonKind::kScaled;
    } else {
      throw ConfigError("unknown epsilon kind '" + kind + "'");
    }
    s.h_size = doc.value("h_size", s.h_size);
    s.vc_dim = doc.value("vc_dim", s.vc_dim);
    s.delta = doc.value("delta", s.delta);
    s.g_size = doc.value("g_size", s.g_size);
    s.n_total = doc.value("n", s.n_total);
    s.scale = doc.value("c", s.scale);
    if (doc.contains("value")) {
      const auto& v = doc.at("value");
      if (v.is_string()) {
        const auto text = v.get<std::string>();
        if (text != "inf" && text != "+inf") throw ConfigError("epsilon value must be a number or \"inf\"");
        s.value = kInf;
      } else {
        s.value = v.get<double>();
      }
    } else if (s.kind == EpsilonKind::kConstant) {
      throw ConfigError("constant epsilon needs 'value'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed epsilon: ") + e.what());
  }
  s.validate();
  return s;
}

json EpsilonSpec::to_json() const {
  json doc = {{"kind", name()}};
  if (kind == EpsilonKind::kConstant) {
    doc["value"] = std::isinf(value) ? json("inf") : json(value);
    return doc;
  }
  doc["delta"] = delta;
  doc["c"] = scale;
  if (kind == EpsilonKind::kVc) {
    doc["vc_dim"] = vc_dim;
    doc["n"] = n_total;
  } else {
    doc["h_size"] = h_size;
  }
  doc["g_size"] = g_size;
  return doc;
}

double epsilon(const EpsilonSpec& spec, std::size_t n_g) {
  spec.validate();
  if (n_g == 0) return kInf;
  if (spec.kind == EpsilonKind::kConstant) return spec.value;
  const double ng = static_cast<double>(n_g);
  switch (spec.kind) {
    case EpsilonKind::kFiniteH:
      require_resolved(spec, false);
      return spec.scale * (18.0 * std::sqrt(finite_h_bracket(spec) / ng));
    case EpsilonKind::kScaled:
      require_resolved(spec, false);
      return spec.scale * std::sqrt(finite_h_bracket(spec) / ng);
    case EpsilonKind::kVc:
      require_resolved(spec, true);
      return spec.scale *
             (18.0 * std::sqrt(2.0 * spec.vc_dim * std::log(16.0 * spec.g_size * spec.n_total / spec.delta) / ng));
    case EpsilonKind::kConstant:
      break;
  }
  return spec.value;
}

double uc_width(UcKind kind, const EpsilonSpec& params, std::size_t n_g) {
  params.validate();
  if (n_g == 0) return kInf;
  const double ng = static_cast<double>(n_g);
  if (kind == UcKind::kFiniteH) {
    require_resolved(params, false);
    return params.scale * (9.0 * std::sqrt(finite_h_bracket(params) / ng));
  }
  require_resolved(params, true);
  const double bracket =
      2.0 * params.vc_dim * std::log(2.0 * params.g_size * params.n_total) + std::log(8.0 / params.delta);
  return params.scale * (9.0 * std::sqrt(bracket / ng));
}

}  // namespace mgl
