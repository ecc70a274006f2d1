#pragma once

#include <vector>

#include "mitral/image.hpp"
#include "mitral/ingestion.hpp"
#include "mitral/measurement.hpp"

namespace mitral {

enum class MarkerKind { e_peak, a_peak, slope_change, extrapolation };

struct Marker {
  MarkerKind kind = MarkerKind::e_peak;
  int beat = 0;
  double x = 0.0;  // image column
  double y = 0.0;  // image row
};

struct OverlayColors {
  Rgb border{0, 0, 255};
  Rgb e_peak{255, 165, 0};
  Rgb a_peak{0, 170, 0};
  Rgb slope_change{255, 0, 0};
  Rgb extrapolation{255, 0, 255};
};

struct Overlay {
  RasterImage image;
  std::vector<Marker> markers;
};

/// Draws the envelope border and per-beat E, A, slope-change and baseline
/// extrapolation markers on a copy of the frame.
Overlay render_overlay(const RasterImage& image, const CalibrationManifest& manifest, const StudyAnalysis& analysis,
                       const OverlayColors& colors = {});

}  // namespace mitral
