#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "mgl/data.hpp"

namespace mgl {

enum class EpsilonKind { kFiniteH, kVc, kConstant, kScaled };

// Error margin eps_n(g) as a function of the group's sample count.
//   finite_H: c * 18 * sqrt((2 ln(|G||H|) + ln(8/delta)) / n_g)
//   vc:       c * 18 * sqrt(2 d ln(16 |G| n / delta) / n_g)
//   scaled:   c * sqrt((2 ln(|G||H|) + ln(8/delta)) / n_g)
//   constant: value
// Every kind is +INF at n_g = 0. Values are not clamped to [0, 1].
struct EpsilonSpec {
  EpsilonKind kind = EpsilonKind::kScaled;
  double h_size = 1.0;
  double vc_dim = 1.0;
  double delta = 0.05;
  // 0 means "take from the training run": |G| = tree node count, n = training size.
  double g_size = 0.0;
  double n_total = 0.0;
  double scale = 1.0;
  double value = 0.0;

  void validate() const;
  // Copy with g_size / n_total filled in where unset.
  EpsilonSpec resolved(std::size_t groups, std::size_t n) const;
  std::string name() const;

  static EpsilonSpec constant(double v);
  static EpsilonSpec from_json(const json& doc);
  json to_json() const;
};

double epsilon(const EpsilonSpec& spec, std::size_t n_g);

enum class UcKind { kFiniteH, kVc };

//   finite_H: c * 9 * sqrt((2 ln(|H||G|) + ln(8/delta)) / n_g)
//   vc:       c * 9 * sqrt((2 d ln(2 |G| n) + ln(8/delta)) / n_g)
double uc_width(UcKind kind, const EpsilonSpec& params, std::size_t n_g);

}  // namespace mgl
