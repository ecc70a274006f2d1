#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mitral/image.hpp"
#include "mitral/ingestion.hpp"
#include "mitral/measurement.hpp"
#include "mitral/segmentation.hpp"

namespace mitral {

struct SynthArtifact {
  enum class Kind { spike, dropout, alias_band };
  Kind kind = Kind::spike;
  double time_ms = 0.0;   // left edge of the artifact, ms from the spectral region's left edge
  double width_ms = 5.0;
  double velocity = 0.0;  // spike height, or alias band depth from the display edge (m/s)
};

/// Piecewise-linear mitral inflow study. Key times (QRS, E and A peaks) are
/// placed on the column grid so analytic peaks coincide with pixel columns.
struct SynthParams {
  double e_velocity = 0.8;  // m/s
  double a_velocity = 0.5;  // m/s, 0 = no A wave (fused)
  double dt_ms = 180.0;
  double heart_rate = 60.0;  // bpm
  int n_beats = 3;
  double dt_second_slope_fraction = 0.0;  // fraction of E left after the knee; 0 = linear descent
  double second_slope_ratio = 0.2;        // slope after the knee relative to the first slope
  double noise_sigma = 0.0;
  std::vector<SynthArtifact> artifacts;

  double e_rise_ms = 70.0;
  std::optional<double> e_onset_ms;  // QRS to E onset; default 0.3 x RR
  double a_rise_ms = 50.0;
  double a_fall_ms = 50.0;
  double a_qrs_gap_ms = 10.0;  // A ends this long before the next QRS
  double lead_in_ms = 150.0;   // first QRS offset from the region's left edge

  std::string label{kMitralInflowLabel};
  int image_width = 1016;
  int image_height = 758;
  double velocity_scale = 0.005;
  double time_scale = 5.0;
  int baseline_row = 500;
  Region spectral_region{40, 60, 975, 560};
  Region ecg_region{40, 600, 975, 740};
  bool flow_above_baseline = true;
  Rgb ecg_color{0, 255, 0};

  std::uint64_t seed = 0;
};

struct TruthBeat {
  double e_velocity = 0.0;
  std::optional<double> a_velocity;
  double dt = 0.0;
  double e_time = 0.0;
  std::optional<double> a_time;
  double e_onset = 0.0;
  double e_end = 0.0;
  std::optional<double> a_start;
  std::optional<double> a_end;
};

struct GroundTruth {
  std::vector<TruthBeat> beats;   // beat i spans QRS i to QRS i+1
  std::vector<double> qrs_times;  // ms
  EnvelopeTrace envelope;         // analytic velocity per spectral column
  EnvelopeMask mask;              // analytic mask (no noise, no artifacts)
  std::vector<double> ecg_rows;   // rendered ECG polyline row per ecg_region column
};

struct SynthStudy {
  RasterImage image;
  CalibrationManifest manifest;
  GroundTruth truth;
};

CalibrationManifest synth_manifest(const SynthParams& params);

/// Throws ErrorCode::invalid_params for out-of-range values and
/// ErrorCode::synth_conflict when E and A supports overlap.
void validate(const SynthParams& params);

SynthStudy generate_synthetic(const SynthParams& params);

/// Analytic envelope velocity at time t (ms) for the given parameters.
double analytic_velocity(const SynthParams& params, double time_ms);

/// Truth beats rendered as pipeline-shaped measurements (beat index = window index).
std::vector<BeatMeasurement> truth_measurements(const GroundTruth& truth);

struct CorpusRanges {
  double e_min = 0.4, e_max = 1.2;
  double a_min = 0.3, a_max = 1.0;
  double dt_min = 120.0, dt_max = 260.0;
  double hr_min = 50.0, hr_max = 110.0;
  int n_beats = 3;
  double noise_sigma = 0.0;
};

/// Draws study parameters for `seed`, redrawing combinations whose waves would collide.
SynthParams sample_corpus_params(std::uint64_t seed, const CorpusRanges& ranges = {});

/// Deterministic uniform [0, 1) stream, identical across platforms.
class UnitRng {
 public:
  explicit UnitRng(std::uint64_t seed) : state_(seed) {}
  double next();

 private:
  std::uint64_t state_;
};

}  // namespace mitral

namespace mitral {

/// QRS times (ms) the generator would place for `params`.
std::vector<double> synth_qrs_times(const SynthParams& params);

/// Adds one narrow bright spike per beat at a seeded position inside each
/// QRS-to-QRS window: height `height_factor` x E, `width_ms` wide.
SynthParams with_beat_spikes(SynthParams params, std::uint64_t seed, double height_factor = 1.5,
                             double width_ms = 5.0);

}  // namespace mitral
