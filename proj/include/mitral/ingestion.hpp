#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mitral/image.hpp"

namespace mitral {

/// Inclusive pixel rectangle.
struct Region {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0 + 1; }
  int height() const noexcept { return y1 - y0 + 1; }
  bool contains_col(int x) const noexcept { return x >= x0 && x <= x1; }
  bool contains_row(int y) const noexcept { return y >= y0 && y <= y1; }

  friend bool operator==(const Region&, const Region&) = default;
};

/// Pixel-to-physical calibration and layout of one Doppler still frame.
struct CalibrationManifest {
  std::string label;
  double velocity_scale = 0.0;  // m/s per pixel row
  double time_scale = 0.0;      // ms per pixel column
  int baseline_row = 0;
  Region spectral_region;
  bool flow_above_baseline = true;
  Rgb ecg_color{0, 255, 0};
  int ecg_color_tolerance = 60;
  Region ecg_region;

  friend bool operator==(const CalibrationManifest&, const CalibrationManifest&) = default;
};

/// Image-class labels recognized by routing; only "mitral_inflow" enters the pipeline.
const std::vector<std::string>& known_labels();
inline constexpr std::string_view kMitralInflowLabel = "mitral_inflow";

CalibrationManifest parse_manifest(std::string_view text, const std::string& source = "<memory>");
CalibrationManifest load_manifest(const std::filesystem::path& path,
                                  std::optional<std::pair<int, int>> image_size = std::nullopt);
std::string format_manifest(const CalibrationManifest& manifest);

/// Throws ErrorCode::manifest on any invariant violation. Region bounds are
/// checked only when the image size is known.
void validate_manifest(const CalibrationManifest& manifest,
                       std::optional<std::pair<int, int>> image_size = std::nullopt,
                       const std::string& source = "<memory>");

struct RouteDecision {
  bool accepted = false;
  std::string label;
};

/// Accepts only the mitral-inflow pulsed-wave class. Unknown labels throw.
RouteDecision route_image(const CalibrationManifest& manifest);

}  // namespace mitral
