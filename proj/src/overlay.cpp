#include "mitral/overlay.hpp"

#include <algorithm>
#include <cmath>

#include "mitral/calibration.hpp"

namespace mitral {

namespace {

void plot(RasterImage& img, int x, int y, Rgb c) {
  if (img.contains(x, y)) img.at(x, y) = c;
}

void square(RasterImage& img, double x, double y, Rgb c) {
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) plot(img, cx + dx, cy + dy, c);
  }
}

}  // namespace

Overlay render_overlay(const RasterImage& image, const CalibrationManifest& manifest, const StudyAnalysis& analysis,
                       const OverlayColors& colors) {
  Overlay out{image, {}};
  const auto& samples = analysis.trace.samples;
  int prev_row = -1;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int col = manifest.spectral_region.x0 + static_cast<int>(i);
    const int row = static_cast<int>(std::lround(velocity_to_row(samples[i].velocity, manifest)));
    if (prev_row < 0) prev_row = row;
    for (int y = std::min(prev_row, row); y <= std::max(prev_row, row); ++y) plot(out.image, col, y, colors.border);
    prev_row = row;
  }

  for (const auto& b : analysis.result.beats) {
    out.markers.push_back({MarkerKind::e_peak, b.beat, time_to_col(b.e_time, manifest),
                           velocity_to_row(b.e_velocity, manifest)});
    if (b.a_velocity && b.a_time) {
      out.markers.push_back({MarkerKind::a_peak, b.beat, time_to_col(*b.a_time, manifest),
                             velocity_to_row(*b.a_velocity, manifest)});
    }
    if (b.slope_point) {
      out.markers.push_back({MarkerKind::slope_change, b.beat, time_to_col(b.slope_point->time, manifest),
                             velocity_to_row(b.slope_point->velocity, manifest)});
    }
    if (b.dt) {
      out.markers.push_back({MarkerKind::extrapolation, b.beat, time_to_col(b.e_time + *b.dt, manifest),
                             static_cast<double>(manifest.baseline_row)});
    }
  }
  for (const auto& m : out.markers) {
    switch (m.kind) {
      case MarkerKind::e_peak: square(out.image, m.x, m.y, colors.e_peak); break;
      case MarkerKind::a_peak: square(out.image, m.x, m.y, colors.a_peak); break;
      case MarkerKind::slope_change: square(out.image, m.x, m.y, colors.slope_change); break;
      case MarkerKind::extrapolation: square(out.image, m.x, m.y, colors.extrapolation); break;
    }
  }
  return out;
}

}  // namespace mitral
