#include "mitral/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "mitral/error.hpp"

namespace mitral {

std::size_t EnvelopeMask::count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

double EnvelopeTrace::step_ms() const {
  if (samples.size() < 2) return 1.0;
  return samples[1].time - samples[0].time;
}

void validate(const SegmentationParams& p) {
  if (p.median_window < 1 || p.median_window % 2 == 0) {
    throw Error(ErrorCode::invalid_params, "median_window must be odd and >= 1");
  }
  if (p.fixed_threshold < 0 || p.fixed_threshold > 255) throw Error(ErrorCode::invalid_params, "fixed_threshold must be 0-255");
  if (p.open_radius < 0) throw Error(ErrorCode::invalid_params, "open_radius must be >= 0");
  if (p.min_component_area < 0) throw Error(ErrorCode::invalid_params, "min_component_area must be >= 0");
}

int otsu_threshold(const std::vector<std::uint64_t>& histogram) {
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    total += static_cast<double>(histogram[i]);
    weighted += static_cast<double>(i) * static_cast<double>(histogram[i]);
  }
  double w0 = 0.0;
  double sum0 = 0.0;
  double best = -1.0;
  int level = 0;
  for (std::size_t t = 0; t + 1 < histogram.size(); ++t) {
    w0 += static_cast<double>(histogram[t]);
    sum0 += static_cast<double>(t) * static_cast<double>(histogram[t]);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mean0 = sum0 / w0;
    const double mean1 = (weighted - sum0) / w1;
    const double between = w0 * w1 * (mean0 - mean1) * (mean0 - mean1);
    if (between > best) {
      best = between;
      level = static_cast<int>(t);
    }
  }
  return level;
}

namespace {

using Grid = std::vector<std::uint8_t>;

Grid luma_region(const RasterImage& image, const Region& r) {
  Grid out(static_cast<std::size_t>(r.width()) * r.height());
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      const Rgb px = image.at(r.x0 + x, r.y0 + y);
      const double l = 0.299 * px.r + 0.587 * px.g + 0.114 * px.b;
      out[static_cast<std::size_t>(y) * r.width() + x] = static_cast<std::uint8_t>(std::lround(std::min(l, 255.0)));
    }
  }
  return out;
}

// Median along columns only, so temporal sharpness of the envelope is kept.
Grid column_median(const Grid& in, int width, int height, int window) {
  if (window <= 1) return in;
  const int half = window / 2;
  Grid out(in.size());
  std::vector<std::uint8_t> buf;
  buf.reserve(window);
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) {
      buf.clear();
      for (int k = std::max(0, y - half); k <= std::min(height - 1, y + half); ++k) {
        buf.push_back(in[static_cast<std::size_t>(k) * width + x]);
      }
      auto mid = buf.begin() + buf.size() / 2;
      std::nth_element(buf.begin(), mid, buf.end());
      out[static_cast<std::size_t>(y) * width + x] = *mid;
    }
  }
  return out;
}

Grid erode(const Grid& in, int width, int height, int radius) {
  Grid tmp(in.size());
  Grid out(in.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::uint8_t v = 1;
      for (int k = x - radius; k <= x + radius && v; ++k) {
        v = (k >= 0 && k < width) ? in[static_cast<std::size_t>(y) * width + k] : 0;
      }
      tmp[static_cast<std::size_t>(y) * width + x] = v;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::uint8_t v = 1;
      for (int k = y - radius; k <= y + radius && v; ++k) {
        v = (k >= 0 && k < height) ? tmp[static_cast<std::size_t>(k) * width + x] : 0;
      }
      out[static_cast<std::size_t>(y) * width + x] = v;
    }
  }
  return out;
}

constexpr std::array<std::pair<int, int>, 8> kNeighbours = {
    {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

// Geodesic reconstruction of `seeds` inside `mask` (8-connectivity).
Grid reconstruct(const Grid& seeds, const Grid& mask, int width, int height) {
  Grid out(mask.size(), 0);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (seeds[i] && mask[i]) {
      out[i] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int x = static_cast<int>(i % width);
    const int y = static_cast<int>(i / width);
    for (auto [dx, dy] : kNeighbours) {
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
      const std::size_t j = static_cast<std::size_t>(ny) * width + nx;
      if (mask[j] && !out[j]) {
        out[j] = 1;
        queue.push_back(j);
      }
    }
  }
  return out;
}

// Keeps components with area >= min_area that reach the baseline band.
Grid filter_components(const Grid& in, int width, int height, int min_area, int baseline_local) {
  Grid out(in.size(), 0);
  std::vector<int> label(in.size(), -1);
  std::vector<std::size_t> members;
  int next = 0;
  for (std::size_t start = 0; start < in.size(); ++start) {
    if (!in[start] || label[start] >= 0) continue;
    members.clear();
    bool touches_baseline = false;
    std::deque<std::size_t> queue{start};
    label[start] = next;
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      members.push_back(i);
      const int x = static_cast<int>(i % width);
      const int y = static_cast<int>(i / width);
      if (std::abs(y - baseline_local) <= 1) touches_baseline = true;
      for (auto [dx, dy] : kNeighbours) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * width + nx;
        if (in[j] && label[j] < 0) {
          label[j] = next;
          queue.push_back(j);
        }
      }
    }
    ++next;
    if (touches_baseline && static_cast<int>(members.size()) >= min_area) {
      for (std::size_t i : members) out[i] = 1;
    }
  }
  return out;
}

}  // namespace

EnvelopeMask segment_envelope_threshold(const RasterImage& image, const CalibrationManifest& manifest,
                                        const SegmentationParams& params) {
  validate(params);
  validate_manifest(manifest, std::pair{image.width(), image.height()});
  const Region& r = manifest.spectral_region;
  const int w = r.width();
  const int h = r.height();
  const int baseline_local = manifest.baseline_row - r.y0;

  const Grid luma = luma_region(image, r);
  const Grid filtered = column_median(luma, w, h, params.median_window);

  int level = params.fixed_threshold;
  if (params.threshold_mode == ThresholdMode::automatic) {
    std::vector<std::uint64_t> histogram(256, 0);
    for (auto v : filtered) ++histogram[v];
    level = otsu_threshold(histogram);
  }

  Grid binary(filtered.size(), 0);
  for (int y = 0; y < h; ++y) {
    const bool analyzed_side = manifest.flow_above_baseline ? y <= baseline_local : y >= baseline_local;
    if (!analyzed_side) continue;
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      // Baseline row uses unfiltered luma.
      const std::uint8_t v = y == baseline_local ? luma[i] : filtered[i];
      binary[i] = v > level ? 1 : 0;
    }
  }
  if (std::none_of(binary.begin(), binary.end(), [](auto v) { return v != 0; })) {
    throw Error(ErrorCode::empty_segmentation, "threshold " + std::to_string(level) + " yields no foreground",
                "segmentation");
  }

  Grid opened = binary;
  if (params.open_radius > 0) opened = reconstruct(erode(binary, w, h, params.open_radius), binary, w, h);
  const Grid kept = filter_components(opened, w, h, params.min_component_area, baseline_local);

  EnvelopeMask mask(w, h);
  bool any = false;
  for (int x = 0; x < w; ++x) {
    if (manifest.flow_above_baseline) {
      for (int y = 0; y <= baseline_local; ++y) {
        if (kept[static_cast<std::size_t>(y) * w + x]) {
          for (int k = y; k <= baseline_local; ++k) mask.at(x, k) = 1;
          any = true;
          break;
        }
      }
    } else {
      for (int y = h - 1; y >= baseline_local; --y) {
        if (kept[static_cast<std::size_t>(y) * w + x]) {
          for (int k = baseline_local; k <= y; ++k) mask.at(x, k) = 1;
          any = true;
          break;
        }
      }
    }
  }
  if (!any) throw Error(ErrorCode::empty_segmentation, "no flow component survives filtering", "segmentation");
  return mask;
}

EnvelopeMask mask_from_gray(const GrayImage& gray, const CalibrationManifest& manifest, const std::string& source) {
  const Region& r = manifest.spectral_region;
  int ox = 0;
  int oy = 0;
  if (gray.width() == r.width() && gray.height() == r.height()) {
    // already cropped
  } else if (gray.width() == 1024 && gray.height() == 1024 && r.x1 < 1024 && r.y1 < 1024) {
    ox = r.x0;
    oy = r.y0;
  } else {
    throw Error(ErrorCode::mask_dimensions,
                source + ": mask is " + std::to_string(gray.width()) + "x" + std::to_string(gray.height()) +
                    ", expected " + std::to_string(r.width()) + "x" + std::to_string(r.height()) + " or 1024x1024",
                "segmentation");
  }
  EnvelopeMask mask(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) mask.at(x, y) = gray.at(ox + x, oy + y) >= 128 ? 1 : 0;
  }
  return mask;
}

EnvelopeMask import_mask(const std::filesystem::path& path, const CalibrationManifest& manifest) {
  return mask_from_gray(load_gray(path), manifest, path.string());
}

GrayImage export_mask(const EnvelopeMask& mask) {
  GrayImage gray(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) gray.at(x, y) = mask.at(x, y) ? 255 : 0;
  }
  return gray;
}

namespace {

// Linear interpolation across gap columns; edges take the nearest measured value.
void fill_gaps(EnvelopeTrace& trace) {
  const int w = static_cast<int>(trace.size());
  std::vector<int> known;
  for (int x = 0; x < w; ++x) {
    if (!trace.gap_flags[x]) known.push_back(x);
  }
  if (known.empty()) return;
  for (int x = 0; x < known.front(); ++x) trace.samples[x].velocity = trace.samples[known.front()].velocity;
  for (int x = known.back() + 1; x < w; ++x) trace.samples[x].velocity = trace.samples[known.back()].velocity;
  for (std::size_t k = 0; k + 1 < known.size(); ++k) {
    const int a = known[k];
    const int b = known[k + 1];
    const double va = trace.samples[a].velocity;
    const double vb = trace.samples[b].velocity;
    for (int x = a + 1; x < b; ++x) {
      const double t = static_cast<double>(x - a) / (b - a);
      trace.samples[x].velocity = va + t * (vb - va);
    }
  }
}

}  // namespace

EnvelopeTrace mask_to_trace(const EnvelopeMask& mask, const CalibrationManifest& manifest) {
  const Region& r = manifest.spectral_region;
  if (mask.width() != r.width() || mask.height() != r.height()) {
    throw Error(ErrorCode::mask_dimensions, "mask does not match spectral region", "segmentation");
  }
  const int w = mask.width();
  EnvelopeTrace trace;
  trace.samples.resize(w);
  trace.gap_flags.assign(w, true);
  for (int x = 0; x < w; ++x) {
    trace.samples[x].time = col_to_time(r.x0 + x, manifest);
    int row = -1;
    if (manifest.flow_above_baseline) {
      for (int y = 0; y < mask.height(); ++y) {
        if (mask.at(x, y)) { row = y; break; }
      }
    } else {
      for (int y = mask.height() - 1; y >= 0; --y) {
        if (mask.at(x, y)) { row = y; break; }
      }
    }
    if (row >= 0) {
      trace.samples[x].velocity = std::max(0.0, row_to_velocity(r.y0 + row, manifest));
      trace.gap_flags[x] = false;
    }
  }

  if (std::all_of(trace.gap_flags.begin(), trace.gap_flags.end(), [](bool g) { return g; })) {
    throw Error(ErrorCode::empty_segmentation, "mask is empty", "segmentation");
  }
  fill_gaps(trace);
  return trace;
}

EnvelopeTrace smooth_trace(const EnvelopeTrace& trace, double window_ms) {
  if (!(window_ms > 0.0)) throw Error(ErrorCode::invalid_params, "smoothing window must be > 0");
  EnvelopeTrace out = trace;
  const std::size_t n = trace.size();
  if (n == 0) return out;
  long cols = std::lround(window_ms / trace.step_ms());
  if (cols < 1) cols = 1;
  if (cols % 2 == 0) ++cols;
  const long half = cols / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + trace.samples[i].velocity;
  for (std::size_t i = 0; i < n; ++i) {
    const long lo = std::max(0L, static_cast<long>(i) - half);
    const long hi = std::min(static_cast<long>(n) - 1, static_cast<long>(i) + half);
    const double mean = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    out.samples[i].velocity = std::max(0.0, mean);
  }
  return out;
}

EnvelopeTrace suppress_spikes(const EnvelopeTrace& trace, const SpikeParams& params) {
  EnvelopeTrace out = trace;
  const long width = std::max(1L, static_cast<long>(std::floor(params.max_width_ms / trace.step_ms() + 1e-9)));
  const long len = width + 1;

  // Works on measured columns only; gap columns are re-interpolated from the cleaned values.
  const bool has_flags = trace.gap_flags.size() == trace.size();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (!has_flags || !trace.gap_flags[i]) idx.push_back(i);
  }
  const long n = static_cast<long>(idx.size());
  if (n < len + 4) return out;

  std::vector<double> v(n);
  for (long i = 0; i < n; ++i) v[i] = trace.samples[idx[i]].velocity;

  // Flat opening with a segment of `len` samples removes plateaus up to `width` wide.
  std::vector<double> mins(n - len + 1);
  for (long j = 0; j + len <= n; ++j) mins[j] = *std::min_element(v.begin() + j, v.begin() + j + len);
  std::vector<bool> flagged(n, false);
  for (long c = 0; c < n; ++c) {
    double opened = -INFINITY;
    for (long j = std::max(0L, c - len + 1); j <= std::min(c, n - len); ++j) opened = std::max(opened, mins[j]);
    flagged[c] = v[c] - opened > params.min_height;
  }

  for (long s = 0; s < n;) {
    if (!flagged[s]) { ++s; continue; }
    long e = s;
    while (e + 1 < n && flagged[e + 1]) ++e;
    const bool left_ok = s >= 2;
    const bool right_ok = e + 2 < n;
    for (long c = s; c <= e; ++c) {
      double estimate;
      if (left_ok && right_ok) {
        const double left = v[s - 1] + (v[s - 1] - v[s - 2]) * static_cast<double>(c - s + 1);
        const double right = v[e + 1] + (v[e + 1] - v[e + 2]) * static_cast<double>(e + 1 - c);
        const double interp = v[s - 1] + (v[e + 1] - v[s - 1]) * static_cast<double>(c - s + 1) / static_cast<double>(e - s + 2);
        std::array<double, 3> est{left, right, interp};
        std::sort(est.begin(), est.end());
        estimate = est[1];
      } else if (s >= 1) {
        estimate = v[s - 1];
      } else if (e + 1 < n) {
        estimate = v[e + 1];
      } else {
        estimate = v[c];
      }
      out.samples[idx[c]].velocity = std::max(0.0, estimate);
    }
    s = e + 1;
  }
  if (has_flags && n < static_cast<long>(trace.size())) fill_gaps(out);
  return out;
}

}  // namespace mitral
