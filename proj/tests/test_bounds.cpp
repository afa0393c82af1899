#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mgl/bounds.hpp"
#include "mgl/error.hpp"

namespace mgl {
namespace {

// Reference values computed with mpmath at 40 significant digits.
constexpr double kFiniteH1000 = 1.729692005862400233615558378528221391736;
constexpr double kFiniteH4000 = 0.8648460029312001168077791892641106958682;
constexpr double kUcVc = 4.069861577840662080034871063417250923909;
constexpr double kEpsVc = 9.093880151645519312929547582529631242841;
constexpr double kFiniteHNearOne = 0.02595710810403144368069925975134584822303;
constexpr double kUcFiniteTrivial = 0.9067404027988826534471922297694962414975;

constexpr double kRel = 1e-14;

EpsilonSpec finite_h(double g, double h, double delta) {
  EpsilonSpec s;
  s.kind = EpsilonKind::kFiniteH;
  s.g_size = g;
  s.h_size = h;
  s.delta = delta;
  return s;
}

EpsilonSpec vc(double d, double g, double n, double delta) {
  EpsilonSpec s;
  s.kind = EpsilonKind::kVc;
  s.vc_dim = d;
  s.g_size = g;
  s.n_total = n;
  s.delta = delta;
  return s;
}

TEST(Epsilon, FiniteHReferenceValues) {
  const auto s = finite_h(2, 4, 0.05);
  EXPECT_NEAR(epsilon(s, 1000), kFiniteH1000, kRel * kFiniteH1000);
  EXPECT_NEAR(epsilon(s, 4000), kFiniteH4000, kRel * kFiniteH4000);
  EXPECT_NEAR(epsilon(s, 4000), epsilon(s, 1000) / 2.0, 1e-15);
}

TEST(Epsilon, FiniteHSingletonClassesNearDeltaOne) {
  const auto s = finite_h(1, 1, 0.9999);
  EXPECT_NEAR(epsilon(s, 1000000), kFiniteHNearOne, kRel * kFiniteHNearOne);
}

TEST(Epsilon, VcReferenceValue) {
  EXPECT_NEAR(epsilon(vc(3, 54, 1e5, 0.05), 500), kEpsVc, kRel * kEpsVc);
}

TEST(UcWidth, ReferenceValues) {
  EXPECT_NEAR(uc_width(UcKind::kVc, vc(3, 54, 1e5, 0.05), 500), kUcVc, kRel * kUcVc);
  EXPECT_NEAR(uc_width(UcKind::kFiniteH, finite_h(1, 1, 0.05), 500), kUcFiniteTrivial, kRel * kUcFiniteTrivial);
  for (double delta : {0.001, 0.3, 0.9}) {
    for (std::size_t n : {1u, 17u, 100000u}) {
      const double expected = 9.0 * std::sqrt(std::log(8.0 / delta) / static_cast<double>(n));
      EXPECT_NEAR(uc_width(UcKind::kFiniteH, finite_h(1, 1, delta), n), expected, 1e-15 * expected);
    }
  }
}

TEST(Epsilon, TwiceUcWidthForFiniteH) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int draw = 0; draw < 50; ++draw) {
    auto s = finite_h(1.0 + std::floor(500 * u(rng)), 1.0 + std::floor(1e6 * u(rng)), 0.001 + 0.998 * u(rng));
    s.scale = 0.1 + 3.0 * u(rng);
    const std::size_t n = 1 + rng() % 1000000;
    EXPECT_EQ(epsilon(s, n) / uc_width(UcKind::kFiniteH, s, n), 2.0);
  }
}

TEST(Epsilon, HalvingLaw) {
  std::mt19937_64 rng(37);
  for (int draw = 0; draw < 50; ++draw) {
    const auto s = finite_h(1 + rng() % 100, 1 + rng() % 100, 0.05);
    const std::size_t n = 1 + rng() % 100000;
    EXPECT_NEAR(epsilon(s, 4 * n), epsilon(s, n) / 2.0, 1e-15 * epsilon(s, n));
  }
}

TEST(Epsilon, InfiniteAtEmptyGroup) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(epsilon(finite_h(2, 4, 0.05), 0), inf);
  EXPECT_EQ(epsilon(vc(3, 54, 1e5, 0.05), 0), inf);
  EXPECT_EQ(epsilon(EpsilonSpec::constant(0.0), 0), inf);
  EpsilonSpec scaled;
  scaled.g_size = 3;
  EXPECT_EQ(epsilon(scaled, 0), inf);
}

TEST(Epsilon, Monotonicity) {
  const auto base = finite_h(10, 10, 0.05);
  for (std::size_t n = 1; n < 2000; n += 37) EXPECT_GT(epsilon(base, n), epsilon(base, n + 1));
  EXPECT_LT(epsilon(base, 100), epsilon(finite_h(11, 10, 0.05), 100));
  EXPECT_LT(epsilon(base, 100), epsilon(finite_h(10, 11, 0.05), 100));
  EXPECT_LT(epsilon(base, 100), epsilon(finite_h(10, 10, 0.04), 100));
  const auto v = vc(3, 54, 1e5, 0.05);
  EXPECT_LT(epsilon(v, 100), epsilon(vc(4, 54, 1e5, 0.05), 100));
  EXPECT_LT(epsilon(v, 100), epsilon(vc(3, 55, 1e5, 0.05), 100));
  EXPECT_LT(epsilon(v, 100), epsilon(vc(3, 54, 1e5, 0.01), 100));
  EXPECT_GT(epsilon(v, 100), epsilon(v, 101));
}

TEST(Epsilon, ScaledAndConstant) {
  EpsilonSpec s;
  s.g_size = 2;
  s.h_size = 4;
  s.scale = 18.0;
  EXPECT_NEAR(epsilon(s, 1000), kFiniteH1000, 1e-14);
  EXPECT_EQ(epsilon(EpsilonSpec::constant(0.25), 10), 0.25);
  EXPECT_GT(epsilon(finite_h(2, 4, 0.05), 10), 1.0);
}

TEST(Epsilon, Errors) {
  EXPECT_THROW(epsilon(finite_h(2, 4, 0.0), 10), ConfigError);
  EXPECT_THROW(epsilon(finite_h(2, 4, 1.0), 10), ConfigError);
  auto neg = finite_h(2, 4, 0.05);
  neg.scale = -1.0;
  EXPECT_THROW(epsilon(neg, 10), ConfigError);
  EXPECT_THROW(epsilon(finite_h(2, 0.5, 0.05), 10), ConfigError);
  EXPECT_THROW(epsilon(vc(0, 2, 10, 0.05), 10), ConfigError);
  EXPECT_THROW(epsilon(finite_h(0, 4, 0.05), 10), ConfigError);
  EXPECT_THROW(epsilon(vc(3, 2, 0, 0.05), 10), ConfigError);
  EXPECT_THROW(EpsilonSpec::from_json(json{{"kind", "finite_H"}, {"delta", 2}}), ConfigError);
  EXPECT_THROW(EpsilonSpec::from_json(json{{"kind", "constant"}}), ConfigError);
  EXPECT_THROW(EpsilonSpec::from_json(json{{"kind", "scaled"}, {"gamma", 1}}), ConfigError);
}

TEST(EpsilonSpec, ResolveAndJson) {
  const auto s = EpsilonSpec::from_json(json{{"kind", "vc"}, {"vc_dim", 3}, {"delta", 0.05}});
  const auto r = s.resolved(54, 100000);
  EXPECT_EQ(r.g_size, 54.0);
  EXPECT_EQ(r.n_total, 1e5);
  EXPECT_EQ(epsilon(r, 500), epsilon(vc(3, 54, 1e5, 0.05), 500));
  const auto again = EpsilonSpec::from_json(r.to_json());
  EXPECT_EQ(epsilon(again, 500), epsilon(r, 500));
  const auto inf = EpsilonSpec::from_json(json{{"kind", "constant"}, {"value", "inf"}});
  EXPECT_TRUE(std::isinf(epsilon(inf, 5)));
  EXPECT_TRUE(std::isinf(epsilon(EpsilonSpec::from_json(inf.to_json()), 5)));
}

}  // namespace
}  // namespace mgl
