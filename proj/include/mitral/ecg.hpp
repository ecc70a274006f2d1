#pragma once

#include <vector>

#include "mitral/image.hpp"
#include "mitral/ingestion.hpp"

namespace mitral {

/// ECG trace recovered from the frame, one sample per ecg_region column.
struct EcgSignal {
  int first_column = 0;            // absolute image column of samples[0]
  std::vector<double> samples;     // rows above ecg_region.y1 (larger = higher on screen)
  std::vector<bool> valid_flags;   // false where no key-colored pixel was found

  std::size_t size() const noexcept { return samples.size(); }
};

struct QrsParams {
  double refractory_ms = 200.0;
  double threshold_fraction = 0.5;  // of the 98th-percentile squared first difference
};

void validate(const QrsParams& params);

/// QRS peak times in ms (same origin as col_to_time), strictly increasing.
struct QrsMarks {
  std::vector<double> times;
};

EcgSignal extract_ecg(const RasterImage& image, const CalibrationManifest& manifest);

QrsMarks detect_qrs(const EcgSignal& signal, const QrsParams& params, const CalibrationManifest& manifest);

/// Column indices (into signal.samples) of detected QRS peaks; detect_qrs converts these to ms.
std::vector<int> detect_qrs_columns(const EcgSignal& signal, const QrsParams& params, double ms_per_column);

}  // namespace mitral
