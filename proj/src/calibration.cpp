#include "mitral/calibration.hpp"

#include <string>

#include "mitral/error.hpp"

namespace mitral {

double row_to_velocity(double row, const CalibrationManifest& manifest) {
  const auto& r = manifest.spectral_region;
  if (row < r.y0 || row > r.y1) {
    throw Error(ErrorCode::region, "row " + std::to_string(row) + " outside spectral region", "calibration");
  }
  const double v = (manifest.baseline_row - row) * manifest.velocity_scale;
  return manifest.flow_above_baseline ? v : -v;
}

double col_to_time(double col, const CalibrationManifest& manifest) {
  const auto& r = manifest.spectral_region;
  if (col < r.x0 || col > r.x1) {
    throw Error(ErrorCode::region, "column " + std::to_string(col) + " outside spectral region", "calibration");
  }
  return (col - r.x0) * manifest.time_scale;
}

double velocity_to_row(double velocity, const CalibrationManifest& manifest) {
  const double rows = velocity / manifest.velocity_scale;
  return manifest.flow_above_baseline ? manifest.baseline_row - rows : manifest.baseline_row + rows;
}

double time_to_col(double time_ms, const CalibrationManifest& manifest) {
  return manifest.spectral_region.x0 + time_ms / manifest.time_scale;
}

}  // namespace mitral
