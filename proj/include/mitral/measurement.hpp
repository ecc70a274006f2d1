#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mitral/ecg.hpp"
#include "mitral/segmentation.hpp"

namespace mitral {

struct FlowPeak {
  std::size_t index = 0;  // sample index in the trace
  double time = 0.0;      // ms
  double velocity = 0.0;  // m/s
  double prominence = 0.0;
  double width = 0.0;     // ms at half prominence
};

struct PeakParams {
  double min_prominence = 0.15;  // m/s
  double min_width_ms = 30.0;
};

struct DtParams {
  double curvature_threshold = 1e-4;  // m/s per ms^2
  double skip_ms = 10.0;
};

void validate(const PeakParams& params);
void validate(const DtParams& params);

enum BeatFlag : std::uint32_t {
  kFusedEa = 1u << 0,
  kGapInDescent = 1u << 1,
  kNoSlopeChange = 1u << 2,
  kMissingA = 1u << 3,
  kDescentTruncated = 1u << 4,
};

/// "fused_ea|no_slope_change" style rendering; empty when no flag is set.
std::string format_flags(std::uint32_t flags);
std::uint32_t parse_flags(const std::string& text);

struct BeatMeasurement {
  int beat = 0;  // index of the QRS-to-QRS window
  double e_velocity = 0.0;
  std::optional<double> a_velocity;
  std::optional<double> ea_ratio;
  std::optional<double> dt;
  double e_time = 0.0;
  std::optional<double> a_time;
  std::uint32_t flags = 0;
  // Second point of the deceleration line (slope change or 5%-of-E fallback).
  std::optional<VelocitySample> slope_point;

  bool has(BeatFlag f) const noexcept { return (flags & f) != 0; }
};

struct StudyMeans {
  std::optional<double> mean_e;
  std::optional<double> mean_a;
  std::optional<double> mean_ea;
  std::optional<double> mean_dt;
};

struct StudyResult {
  std::vector<BeatMeasurement> beats;
  StudyMeans means;
  std::size_t n_beats = 0;
};

struct AggregateOptions {
  bool exclude_outliers = false;  // drop values > 2 MAD from the per-field median
};

/// Local maxima gated by topographic prominence and width at half prominence.
std::vector<FlowPeak> detect_flow_peaks(const EnvelopeTrace& trace, const PeakParams& params = {});

/// Moves each peak to the largest sample of `trace` within `radius` samples.
std::vector<FlowPeak> refine_peaks(const EnvelopeTrace& trace, std::vector<FlowPeak> peaks, std::size_t radius);

struct LabeledBeat {
  int beat = 0;
  double window_start = 0.0;
  double window_end = 0.0;
  FlowPeak e;
  std::optional<FlowPeak> a;
};

/// QRS-to-QRS windows: A is the last peak before the closing QRS, E the
/// largest earlier peak; a lone peak is E with A absent.
std::vector<LabeledBeat> label_beats(const std::vector<FlowPeak>& peaks, const QrsMarks& qrs);

struct DtResult {
  std::optional<double> dt;
  std::optional<VelocitySample> slope_point;
  std::size_t end_index = 0;  // last sample examined on the descent
  std::uint32_t flags = 0;
};

/// `trace` is expected to be the smoothed envelope.
DtResult deceleration_time(const EnvelopeTrace& trace, const FlowPeak& e_peak, const DtParams& params = {});

StudyMeans aggregate(const std::vector<BeatMeasurement>& beats, const AggregateOptions& options = {});

struct MeasureOptions {
  SegmentationParams segmentation;
  std::optional<std::filesystem::path> mask_path;  // external mask instead of thresholding
  double smoothing_ms = 15.0;
  SpikeParams spikes;
  QrsParams qrs;
  PeakParams peaks;
  DtParams dt;
  AggregateOptions aggregation;
};

/// Beat measurements from an envelope trace and QRS marks.
std::vector<BeatMeasurement> measure_trace(const EnvelopeTrace& trace, const QrsMarks& qrs,
                                           const MeasureOptions& options = {});

struct StudyAnalysis {
  StudyResult result;
  EnvelopeTrace trace;     // raw upper border
  EnvelopeTrace smoothed;  // after spike suppression and smoothing
  QrsMarks qrs;
};

StudyAnalysis analyze_study(const RasterImage& image, const CalibrationManifest& manifest,
                            const MeasureOptions& options = {});
StudyResult measure_study(const RasterImage& image, const CalibrationManifest& manifest,
                          const MeasureOptions& options = {});

}  // namespace mitral
