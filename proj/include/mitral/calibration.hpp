#pragma once

#include "mitral/ingestion.hpp"

namespace mitral {

struct VelocitySample {
  double time = 0.0;      // ms from the spectral region's left edge
  double velocity = 0.0;  // m/s, positive on the analyzed side of the baseline
};

/// Velocity at a pixel row; positive on the side given by flow_above_baseline.
/// Throws ErrorCode::region when the row lies outside the spectral region.
double row_to_velocity(double row, const CalibrationManifest& manifest);

/// Elapsed time at a pixel column, measured from spectral_region.x0.
double col_to_time(double col, const CalibrationManifest& manifest);

// Inverses; unchecked so callers can place markers anywhere on the frame.
double velocity_to_row(double velocity, const CalibrationManifest& manifest);
double time_to_col(double time_ms, const CalibrationManifest& manifest);

}  // namespace mitral
