#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mitral/calibration.hpp"
#include "mitral/image.hpp"
#include "mitral/ingestion.hpp"

namespace mitral {

/// Binary flow-signal mask in spectral-region coordinates (1 = flow).
class EnvelopeMask {
 public:
  EnvelopeMask() = default;
  EnvelopeMask(int width, int height) : width_(width), height_(height), cells_(static_cast<std::size_t>(width) * height, 0) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::uint8_t& at(int x, int y) { return cells_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t at(int x, int y) const { return cells_[static_cast<std::size_t>(y) * width_ + x]; }
  std::size_t count() const;

  friend bool operator==(const EnvelopeMask&, const EnvelopeMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Upper border of the flow signal, one sample per spectral column.
struct EnvelopeTrace {
  std::vector<VelocitySample> samples;
  std::vector<bool> gap_flags;  // true where the column had no flow and was interpolated

  std::size_t size() const noexcept { return samples.size(); }
  double step_ms() const;
};

enum class ThresholdMode { automatic, fixed };

struct SegmentationParams {
  int median_window = 3;  // odd; applied along each column (velocity axis)
  ThresholdMode threshold_mode = ThresholdMode::automatic;
  int fixed_threshold = 128;
  int open_radius = 1;
  int min_component_area = 25;
};

void validate(const SegmentationParams& params);

/// Two-class between-variance maximizing level; foreground is `value > level`.
int otsu_threshold(const std::vector<std::uint64_t>& histogram);

/// Classical envelope segmentation: luma, per-column median, threshold,
/// opening by reconstruction, component-area and baseline-contact filtering,
/// then fill each column from the baseline to its outermost flow pixel.
EnvelopeMask segment_envelope_threshold(const RasterImage& image, const CalibrationManifest& manifest,
                                        const SegmentationParams& params = {});

/// Accepts a mask the size of the spectral region, or a 1024x1024 frame with
/// the source image zero-padded at the top-left corner.
EnvelopeMask import_mask(const std::filesystem::path& path, const CalibrationManifest& manifest);
EnvelopeMask mask_from_gray(const GrayImage& gray, const CalibrationManifest& manifest,
                            const std::string& source = "<memory>");
GrayImage export_mask(const EnvelopeMask& mask);

EnvelopeTrace mask_to_trace(const EnvelopeMask& mask, const CalibrationManifest& manifest);

/// Centered moving average; the window is rounded to an odd column count.
EnvelopeTrace smooth_trace(const EnvelopeTrace& trace, double window_ms);

struct SpikeParams {
  double max_width_ms = 10.0;  // excursions at most this wide are candidates
  double min_height = 0.10;    // m/s above the opened trace
};

/// Replaces narrow upward excursions (grayscale opening residue above
/// min_height) with the median of left extrapolation, right extrapolation and
/// linear interpolation from the surrounding samples.
EnvelopeTrace suppress_spikes(const EnvelopeTrace& trace, const SpikeParams& params = {});

}  // namespace mitral
