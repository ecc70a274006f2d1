#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mitral/error.hpp"
#include "mitral/stats.hpp"

using namespace mitral;

namespace {

using Series = std::vector<double>;

// Raw-sum product-moment formula, evaluated independently of the library.
double textbook_r(const Series& a, const Series& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
    sab += a[i] * b[i];
  }
  return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
}

Series random_series(std::mt19937& rng, std::size_t n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Series s(n);
  for (auto& x : s) x = g(rng);
  return s;
}

MeasurementSet varied_set() {
  MeasurementSet set;
  for (int study = 0; study < 4; ++study) {
    std::vector<BeatMeasurement> beats;
    for (int b = 0; b < 3; ++b) {
      BeatMeasurement m;
      m.beat = b;
      m.e_velocity = 0.5 + 0.07 * study + 0.01 * b;
      m.a_velocity = 0.4 + 0.05 * b + 0.02 * study;
      m.ea_ratio = m.e_velocity / *m.a_velocity;
      m.dt = 150.0 + 10.0 * study - 3.0 * b;
      beats.push_back(m);
    }
    set["study" + std::to_string(study)] = beats;
  }
  return set;
}

}  // namespace

TEST(BlandAltman, IdenticalSeries) {
  const Series a{0.3, 0.9, 1.4, 2.0};
  const BlandAltman ba = bland_altman(a, a);
  EXPECT_EQ(ba.bias, 0.0);
  EXPECT_EQ(ba.sd, 0.0);
  EXPECT_EQ(ba.loa_low, 0.0);
  EXPECT_EQ(ba.loa_high, 0.0);
}

TEST(BlandAltman, HandComputedSampleSd) {
  const BlandAltman ba = bland_altman(Series{1, 2, 3}, Series{0, 2, 4});
  EXPECT_NEAR(ba.bias, 0.0, 1e-15);
  EXPECT_NEAR(ba.sd, 1.0, 1e-15);
  EXPECT_NEAR(ba.loa_low, -2.0, 1e-15);
  EXPECT_NEAR(ba.loa_high, 2.0, 1e-15);
}

TEST(BlandAltman, ConstantOffset) {
  const Series b{0.2, 0.5, 0.7, 1.1};
  Series a = b;
  for (auto& x : a) x += 0.25;
  const BlandAltman ba = bland_altman(a, b);
  EXPECT_NEAR(ba.bias, 0.25, 1e-12);
  EXPECT_NEAR(ba.sd, 0.0, 1e-12);
}

TEST(BlandAltman, Errors) {
  EXPECT_THROW(bland_altman(Series{1, 2}, Series{1}), Error);
  EXPECT_THROW(bland_altman(Series{1}, Series{1}), Error);
}

TEST(Pearson, ExactLinearity) {
  const Series a{1.0, 2.5, 3.0, 7.0};
  Series up, down;
  for (double x : a) {
    up.push_back(2.0 * x + 1.0);
    down.push_back(-x);
  }
  EXPECT_NEAR(pearson(a, up), 1.0, 1e-12);
  EXPECT_NEAR(pearson(a, down), -1.0, 1e-12);
}

TEST(Pearson, HandExample) { EXPECT_NEAR(pearson(Series{1, 2, 3}, Series{1, 2, 4}), 0.98198, 1e-4); }

TEST(Pearson, ConstantSeriesIsError) {
  try {
    pearson(Series{1, 2, 3}, Series{5, 5, 5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::stats);
  }
}

TEST(RSquared, ExactFit) {
  const Series a{0.0, 1.0, 4.0, 9.0};
  Series b;
  for (double x : a) b.push_back(3.0 * x - 2.0);
  EXPECT_NEAR(r_squared(a, b), 1.0, 1e-12);
}

TEST(RSquared, HandExample) { EXPECT_NEAR(r_squared(Series{1, 2, 3}, Series{1, 2, 4}), 0.96429, 1e-4); }

TEST(RSquared, ConstantIsError) { EXPECT_THROW(r_squared(Series{1, 2, 3}, Series{2, 2, 2}), Error); }

TEST(StatsProperty, RSquaredIsPearsonSquared) {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + trial % 50;
    const Series a = random_series(rng, n, 1.0);
    Series b = random_series(rng, n, 0.5);
    for (std::size_t i = 0; i < n; ++i) b[i] += 0.8 * a[i];
    const double r = pearson(a, b);
    EXPECT_NEAR(r_squared(a, b), r * r, 1e-12);
    EXPECT_NEAR(r, textbook_r(a, b), 1e-9);
    EXPECT_LE(std::abs(r), 1.0);
  }
}

TEST(StatsProperty, PearsonAffineInvariantAndBiasShiftEquivariant) {
  std::mt19937 rng(22);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    const Series a = random_series(rng, 20, 1.0);
    const Series b = random_series(rng, 20, 1.0);
    const double k = u(rng), c = u(rng) - 2.5;
    Series a2, b2;
    for (double x : a) a2.push_back(k * x + c);
    for (double x : b) b2.push_back(x + c);
    EXPECT_NEAR(pearson(a2, b), pearson(a, b), 1e-12);
    EXPECT_NEAR(pearson(a, b2), pearson(a, b), 1e-12);
    Series shifted;
    for (double x : a) shifted.push_back(x + c);
    EXPECT_NEAR(bland_altman(shifted, b).bias, bland_altman(a, b).bias + c, 1e-12);
  }
}

TEST(StatsProperty, LimitsSpanFourSd) {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const BlandAltman ba = bland_altman(random_series(rng, 10, 3.0), random_series(rng, 10, 3.0));
    EXPECT_DOUBLE_EQ(ba.loa_high - ba.loa_low, 4.0 * ba.sd);
  }
}

TEST(Compare, SelfComparison) {
  const MeasurementSet set = varied_set();
  for (Field f : kAllFields) {
    const AgreementStats s = compare(set, set, f);
    EXPECT_EQ(s.n, 12u) << to_string(f);
    EXPECT_EQ(s.bias, 0.0);
    EXPECT_EQ(s.sd, 0.0);
    EXPECT_NEAR(*s.pearson_r, 1.0, 1e-12);
    EXPECT_NEAR(*s.r_squared, 1.0, 1e-12);
    EXPECT_EQ(s.dropped, 0u);
  }
}

TEST(Compare, ConstantShiftInE) {
  const MeasurementSet ref = varied_set();
  MeasurementSet test = ref;
  for (auto& [id, beats] : test) {
    for (auto& b : beats) b.e_velocity += 0.06;
  }
  const AgreementStats s = compare(ref, test, Field::e);
  EXPECT_NEAR(s.bias, 0.06, 1e-12);
  EXPECT_NEAR(s.sd, 0.0, 1e-12);
  EXPECT_NEAR(*s.pearson_r, 1.0, 1e-12);
}

TEST(Compare, DisjointKeysIsError) {
  const MeasurementSet a = varied_set();
  MeasurementSet b;
  for (const auto& [id, beats] : a) b["other_" + id] = beats;
  try {
    compare(a, b, Field::e);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::stats);
  }
}

TEST(Compare, MissingKeysAreDroppedAndCounted) {
  const MeasurementSet ref = varied_set();
  MeasurementSet test = ref;
  test.erase("study3");
  test["study0"].pop_back();
  test["study1"][0].a_velocity.reset();
  const AgreementStats e = compare(ref, test, Field::e);
  EXPECT_EQ(e.n, 8u);
  EXPECT_EQ(e.dropped, 4u);
  const AgreementStats a = compare(ref, test, Field::a);
  EXPECT_EQ(a.n, 7u);
  EXPECT_EQ(a.dropped, 5u);
}

TEST(Compare, ConstantSeriesLeavesCorrelationEmpty) {
  MeasurementSet ref = varied_set();
  for (auto& [id, beats] : ref) {
    for (auto& b : beats) b.dt = 180.0;
  }
  const AgreementStats s = compare(ref, ref, Field::dt);
  EXPECT_FALSE(s.pearson_r);
  EXPECT_FALSE(s.r_squared);
  EXPECT_EQ(s.bias, 0.0);
}

TEST(PerStudyMeans, OneBeatPerStudy) {
  const MeasurementSet means = per_study_means(varied_set());
  ASSERT_EQ(means.size(), 4u);
  const auto& s1 = means.at("study1");
  ASSERT_EQ(s1.size(), 1u);
  EXPECT_NEAR(s1[0].e_velocity, 0.58, 1e-12);
  EXPECT_NEAR(*s1[0].dt, 157.0, 1e-12);
}
