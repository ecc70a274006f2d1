#include "mitral/ecg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "mitral/error.hpp"

namespace mitral {

void validate(const QrsParams& p) {
  if (!(p.refractory_ms > 0.0)) throw Error(ErrorCode::invalid_params, "refractory_ms must be > 0");
  if (!(p.threshold_fraction > 0.0 && p.threshold_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_params, "threshold_fraction must be in (0, 1)");
  }
}

EcgSignal extract_ecg(const RasterImage& image, const CalibrationManifest& manifest) {
  validate_manifest(manifest, std::pair{image.width(), image.height()});
  const Region& r = manifest.ecg_region;
  const Rgb key = manifest.ecg_color;
  const int tol = manifest.ecg_color_tolerance;
  auto matches = [&](Rgb px) {
    return std::abs(px.r - key.r) <= tol && std::abs(px.g - key.g) <= tol && std::abs(px.b - key.b) <= tol;
  };

  EcgSignal signal;
  signal.first_column = r.x0;
  signal.samples.assign(r.width(), 0.0);
  signal.valid_flags.assign(r.width(), false);
  std::vector<int> valid;
  for (int i = 0; i < r.width(); ++i) {
    double sum = 0.0;
    int count = 0;
    for (int y = r.y0; y <= r.y1; ++y) {
      if (matches(image.at(r.x0 + i, y))) {
        sum += y;
        ++count;
      }
    }
    if (count > 0) {
      signal.samples[i] = r.y1 - sum / count;
      signal.valid_flags[i] = true;
      valid.push_back(i);
    }
  }
  if (valid.empty()) throw Error(ErrorCode::empty_ecg, "no ECG-colored pixels in ecg_region", "ecg");

  for (int i = 0; i < valid.front(); ++i) signal.samples[i] = signal.samples[valid.front()];
  for (int i = valid.back() + 1; i < r.width(); ++i) signal.samples[i] = signal.samples[valid.back()];
  for (std::size_t k = 0; k + 1 < valid.size(); ++k) {
    const int a = valid[k];
    const int b = valid[k + 1];
    for (int i = a + 1; i < b; ++i) {
      const double t = static_cast<double>(i - a) / (b - a);
      signal.samples[i] = signal.samples[a] + t * (signal.samples[b] - signal.samples[a]);
    }
  }
  return signal;
}

std::vector<int> detect_qrs_columns(const EcgSignal& signal, const QrsParams& params, double ms_per_column) {
  validate(params);
  const auto& s = signal.samples;
  std::vector<int> marks;
  if (s.size() < 2) return marks;

  std::vector<double> energy(s.size() - 1);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) energy[i] = (s[i + 1] - s[i]) * (s[i + 1] - s[i]);

  std::vector<double> sorted = energy;
  const auto rank = static_cast<std::size_t>(std::ceil(0.98 * static_cast<double>(sorted.size()))) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + rank, sorted.end());
  const double p98 = sorted[rank];
  if (!(p98 > 0.0)) return marks;
  const double threshold = params.threshold_fraction * p98;

  struct Candidate {
    int column;
    double amplitude;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < energy.size();) {
    if (!(energy[i] > threshold)) { ++i; continue; }
    std::size_t j = i;
    while (j + 1 < energy.size() && energy[j + 1] > threshold) ++j;
    // Run of differences i..j spans samples i..j+1.
    std::size_t best = i;
    for (std::size_t k = i; k <= j + 1; ++k) {
      if (s[k] > s[best]) best = k;
    }
    candidates.push_back({static_cast<int>(best), s[best]});
    i = j + 1;
  }

  std::vector<Candidate> kept;
  for (const auto& c : candidates) {
    if (!kept.empty() && (c.column - kept.back().column) * ms_per_column < params.refractory_ms) {
      if (c.amplitude > kept.back().amplitude) kept.back() = c;
      continue;
    }
    kept.push_back(c);
  }
  for (const auto& c : kept) marks.push_back(c.column);
  return marks;
}

QrsMarks detect_qrs(const EcgSignal& signal, const QrsParams& params, const CalibrationManifest& manifest) {
  QrsMarks marks;
  for (int col : detect_qrs_columns(signal, params, manifest.time_scale)) {
    marks.times.push_back((signal.first_column + col - manifest.spectral_region.x0) * manifest.time_scale);
  }
  return marks;
}

}  // namespace mitral
