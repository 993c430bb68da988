#include <gtest/gtest.h>

#include <cmath>

#include "almostreg/regularity.hpp"

using namespace almostreg;

namespace {

ModulusSearchConfig search() {
  ModulusSearchConfig cfg;
  cfg.grid_step = 0.01;
  cfg.gamma0 = 0.5;
  return cfg;
}

SampledMap scalar_map(double (*f)(double)) {
  return SampledMap::from_scalar(PointCloud::line(-1, 1, 0.01), f);
}

}  // namespace

TEST(Moduli, LinearMapRates) {
  const SampledMap g = scalar_map([](double x) { return 2 * x; });
  const ModulusReport sur = estimate_modulus(g, {0}, {0}, ModulusKind::sur, search());
  const ModulusReport reg = estimate_modulus(g, {0}, {0}, ModulusKind::reg, search());
  EXPECT_NEAR(sur.lower, 2.0, 0.06);
  EXPECT_NEAR(reg.upper.value(), 0.5, 0.02);
  EXPECT_LE(sur.lower, sur.upper.to_double());
  EXPECT_FALSE(sur.ladder.empty());
  EXPECT_TRUE(verify_product_laws(sur, reg).holds);
}

TEST(Moduli, PseudoOpenAndSubregular) {
  const SampledMap g = scalar_map([](double x) { return 2 * x; });
  const ModulusReport popen = estimate_modulus(g, {0}, {0}, ModulusKind::popen, search());
  const ModulusReport subreg = estimate_modulus(g, {0}, {0}, ModulusKind::subreg, search());
  EXPECT_NEAR(popen.lower, 2.0, 0.03);
  EXPECT_NEAR(subreg.upper.value(), 0.5, 0.03);
  EXPECT_TRUE(verify_product_laws(popen, subreg).holds);
}

TEST(Moduli, EqualityLaws) {
  const SampledMap g = scalar_map([](double x) { return x + 0.3 * std::sin(x); });
  const ModulusReport reg = estimate_modulus(g, {0}, {0}, ModulusKind::reg, search());
  const ModulusReport lip = estimate_modulus(g, {0}, {0}, ModulusKind::lip_inv, search());
  EXPECT_TRUE(verify_product_laws(reg, lip).holds);
  EXPECT_THROW(verify_product_laws(reg, reg), std::invalid_argument);
}

// The closure tolerance pulls distance-type estimates below 1/a by O(tau / gamma):
// every ladder level stays below the exact value and shrinking gamma never helps.
TEST(Moduli, RegularityLadderApproachesFromBelow) {
  for (double a : {0.5, 1.0, 1.5, 2.0}) {
    const SampledMap g = SampledMap::from_scalar(PointCloud::line(-1, 1, 0.01), [a](double x) { return a * x; });
    const ModulusReport reg = estimate_modulus(g, {0}, {0}, ModulusKind::reg, search());
    ASSERT_FALSE(reg.ladder.empty());
    double prev = 1.0 / a;
    for (const GammaLevel& l : reg.ladder) {
      EXPECT_LE(l.upper.value(), 1.0 / a + 1e-9) << a;
      EXPECT_LE(l.upper.value(), prev + 1e-9) << a;
      prev = l.upper.value();
    }
    EXPECT_GT(reg.ladder.front().upper.value() * a, 0.85) << a;
    if (reg.resolution_limited) {
      EXPECT_EQ(reg.gamma, reg.ladder.back().gamma);
    }
  }
}

TEST(Moduli, ReferenceMustBeOnGraph) {
  const SampledMap g = scalar_map([](double x) { return x; });
  EXPECT_THROW(estimate_modulus(g, {0}, {0.5}, ModulusKind::sur, search()), std::invalid_argument);
}

TEST(Moduli, KindNamesRoundTrip) {
  for (ModulusKind k : {ModulusKind::sur, ModulusKind::reg, ModulusKind::lip_inv, ModulusKind::popen,
                        ModulusKind::subreg, ModulusKind::calm, ModulusKind::lopen, ModulusKind::semireg,
                        ModulusKind::incalm})
    EXPECT_EQ(modulus_kind_from_string(to_string(k)), k);
  EXPECT_FALSE(modulus_kind_from_string("nope").has_value());
}
