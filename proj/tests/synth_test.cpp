#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mitral/error.hpp"
#include "mitral/image.hpp"
#include "mitral/segmentation.hpp"
#include "mitral/synth.hpp"

using namespace mitral;

namespace {

double snap(double t, double step) { return std::round(t / step) * step; }

// Independent evaluation of the wave supports for a linear-descent study.
bool supports_overlap(const SynthParams& p) {
  const double rr = 60000.0 / p.heart_rate;
  for (int k = 0; k < p.n_beats; ++k) {
    const double q = snap(p.lead_in_ms + k * rr, p.time_scale);
    const double next = snap(p.lead_in_ms + (k + 1) * rr, p.time_scale);
    const double e_peak = snap(q + 0.3 * rr + p.e_rise_ms, p.time_scale);
    const double e_end = e_peak + p.dt_ms;
    const double a_peak = snap(next - p.a_qrs_gap_ms - p.a_fall_ms, p.time_scale);
    if (e_end > a_peak - p.a_rise_ms) return true;
  }
  return false;
}

}  // namespace

TEST(Synth, SameSeedGivesIdenticalBytes) {
  SynthParams p;
  p.noise_sigma = 0.2;
  p.seed = 99;
  p.artifacts.push_back({SynthArtifact::Kind::spike, 700.0, 5.0, 1.1});
  EXPECT_EQ(encode_ppm(generate_synthetic(p).image), encode_ppm(generate_synthetic(p).image));
  SynthParams q = p;
  q.seed = 100;
  EXPECT_NE(encode_ppm(generate_synthetic(p).image), encode_ppm(generate_synthetic(q).image));
}

TEST(Synth, AnalyticMaskEqualsThresholdedRendering) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SynthStudy s = generate_synthetic(sample_corpus_params(seed));
    const Region& sr = s.manifest.spectral_region;
    EnvelopeMask thresholded(sr.width(), sr.height());
    for (int y = 0; y < sr.height(); ++y) {
      for (int x = 0; x < sr.width(); ++x) thresholded.at(x, y) = s.image.at(sr.x0 + x, sr.y0 + y).r > 100 ? 1 : 0;
    }
    EXPECT_EQ(thresholded, s.truth.mask) << "seed " << seed;
    EXPECT_EQ(segment_envelope_threshold(s.image, s.manifest), s.truth.mask) << "seed " << seed;
  }
}

TEST(Synth, GroundTruthEchoesInputs) {
  SynthParams p;
  p.e_velocity = 0.8;
  p.a_velocity = 0.5;
  p.dt_ms = 180.0;
  p.heart_rate = 60.0;
  p.n_beats = 3;
  const GroundTruth t = generate_synthetic(p).truth;
  ASSERT_EQ(t.beats.size(), 3u);
  ASSERT_EQ(t.qrs_times.size(), 4u);
  for (const auto& b : t.beats) {
    EXPECT_EQ(b.e_velocity, 0.8);
    EXPECT_EQ(*b.a_velocity, 0.5);
    EXPECT_EQ(b.dt, 180.0);
  }
  for (std::size_t k = 1; k < t.qrs_times.size(); ++k) EXPECT_NEAR(t.qrs_times[k] - t.qrs_times[k - 1], 1000.0, 5.0);
}

TEST(Synth, AnalyticEnvelopeMatchesTruthValues) {
  SynthParams p;
  const SynthStudy s = generate_synthetic(p);
  for (const auto& b : s.truth.beats) {
    EXPECT_DOUBLE_EQ(analytic_velocity(p, b.e_time), p.e_velocity);
    EXPECT_DOUBLE_EQ(analytic_velocity(p, *b.a_time), p.a_velocity);
    EXPECT_NEAR(analytic_velocity(p, b.e_time + p.dt_ms), 0.0, 1e-12);
    EXPECT_NEAR(analytic_velocity(p, b.e_time + p.dt_ms / 2.0), p.e_velocity / 2.0, 1e-12);
  }
}

TEST(Synth, KneeLeavesFractionOfE) {
  SynthParams p;
  p.dt_second_slope_fraction = 0.3;
  const SynthStudy s = generate_synthetic(p);
  const double knee = s.truth.beats[0].e_time + 0.7 * p.dt_ms;
  EXPECT_NEAR(analytic_velocity(p, knee), 0.3 * p.e_velocity, 1e-12);
}

TEST(Synth, FastRateWithLongDtConflicts) {
  SynthParams p;
  p.heart_rate = 200.0;
  p.dt_ms = 300.0;
  try {
    generate_synthetic(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::synth_conflict);
    EXPECT_NE(std::string(e.what()).find("overlaps A wave"), std::string::npos);
  }
}

TEST(Synth, InvalidParamsRejected) {
  SynthParams p;
  p.heart_rate = 250.0;
  EXPECT_THROW(validate(p), Error);
  p = {};
  p.e_velocity = 0.0;
  EXPECT_THROW(validate(p), Error);
  p = {};
  p.e_velocity = 5.0;
  EXPECT_THROW(validate(p), Error);
  p = {};
  p.n_beats = 20;
  EXPECT_THROW(validate(p), Error);
}

TEST(Synth, FusedStudyHasNoA) {
  SynthParams p;
  p.a_velocity = 0.0;
  const GroundTruth t = generate_synthetic(p).truth;
  for (const auto& b : t.beats) EXPECT_FALSE(b.a_velocity);
  for (const auto& m : truth_measurements(t)) EXPECT_TRUE(m.has(kFusedEa));
}

TEST(Synth, CorpusParamsAreReproducibleAndInRange) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SynthParams a = sample_corpus_params(seed);
    const SynthParams b = sample_corpus_params(seed);
    EXPECT_EQ(a.e_velocity, b.e_velocity);
    EXPECT_EQ(a.dt_ms, b.dt_ms);
    EXPECT_GE(a.e_velocity, 0.4);
    EXPECT_LE(a.e_velocity, 1.2);
    EXPECT_GE(a.a_velocity, 0.3);
    EXPECT_LE(a.a_velocity, 1.0);
    EXPECT_GE(a.dt_ms, 120.0);
    EXPECT_LE(a.dt_ms, 260.0);
    EXPECT_GE(a.heart_rate, 50.0);
    EXPECT_LE(a.heart_rate, 110.0);
  }
}

TEST(UnitRng, StaysInUnitInterval) {
  UnitRng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(SynthProperty, BeatCountAndABeforeQrs) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CorpusRanges r;
    r.n_beats = 1 + static_cast<int>(seed % 3);
    const SynthParams p = sample_corpus_params(seed, r);
    const GroundTruth t = generate_synthetic(p).truth;
    ASSERT_EQ(t.beats.size(), static_cast<std::size_t>(p.n_beats));
    for (std::size_t k = 0; k < t.beats.size(); ++k) {
      ASSERT_TRUE(t.beats[k].a_time);
      EXPECT_LT(*t.beats[k].a_time, t.qrs_times[k + 1]);
      EXPECT_LE(*t.beats[k].a_end, t.qrs_times[k + 1]);
      EXPECT_GT(t.beats[k].e_time, t.qrs_times[k]);
    }
  }
}

TEST(SynthProperty, ConflictIffSupportsOverlap) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int conflicts = 0, clean = 0;
  for (int trial = 0; trial < 500; ++trial) {
    SynthParams p;
    p.heart_rate = 40.0 + 180.0 * u(rng);
    p.dt_ms = 80.0 + 320.0 * u(rng);
    p.n_beats = 1 + static_cast<int>(u(rng) * 2);
    bool threw = false;
    try {
      validate(p);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::synth_conflict) << e.what();
      threw = true;
    }
    EXPECT_EQ(threw, supports_overlap(p)) << "HR " << p.heart_rate << " DT " << p.dt_ms;
    (threw ? conflicts : clean)++;
  }
  EXPECT_GT(conflicts, 50);
  EXPECT_GT(clean, 50);
}

TEST(SynthProperty, AnalyticMaskTraceWithinOneVelocityPixel) {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const SynthStudy s = generate_synthetic(sample_corpus_params(seed));
    const EnvelopeTrace t = mask_to_trace(s.truth.mask, s.manifest);
    ASSERT_EQ(t.size(), s.truth.envelope.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_LE(std::abs(t.samples[i].velocity - s.truth.envelope.samples[i].velocity), s.manifest.velocity_scale)
          << "seed " << seed << " column " << i;
    }
  }
}

TEST(WithBeatSpikes, OneSpikePerBeatInsideItsWindow) {
  const SynthParams base = sample_corpus_params(4);
  const SynthParams p = with_beat_spikes(base, 4);
  const auto qrs = synth_qrs_times(base);
  ASSERT_EQ(p.artifacts.size(), static_cast<std::size_t>(base.n_beats));
  for (std::size_t k = 0; k < p.artifacts.size(); ++k) {
    EXPECT_EQ(p.artifacts[k].kind, SynthArtifact::Kind::spike);
    EXPECT_GT(p.artifacts[k].time_ms, qrs[k]);
    EXPECT_LT(p.artifacts[k].time_ms, qrs[k + 1]);
    EXPECT_DOUBLE_EQ(p.artifacts[k].velocity, 1.5 * base.e_velocity);
  }
}
