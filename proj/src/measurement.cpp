#include "mitral/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "mitral/error.hpp"

namespace mitral {

void validate(const PeakParams& p) {
  if (!(p.min_prominence > 0.0) || !(p.min_width_ms > 0.0)) {
    throw Error(ErrorCode::invalid_params, "peak min_prominence and min_width_ms must be > 0");
  }
}

void validate(const DtParams& p) {
  if (!(p.curvature_threshold > 0.0) || !(p.skip_ms > 0.0)) {
    throw Error(ErrorCode::invalid_params, "curvature_threshold and skip_ms must be > 0");
  }
}

namespace {

constexpr std::pair<BeatFlag, const char*> kFlagNames[] = {
    {kFusedEa, "fused_ea"},
    {kGapInDescent, "gap_in_descent"},
    {kNoSlopeChange, "no_slope_change"},
    {kMissingA, "missing_a"},
    {kDescentTruncated, "descent_truncated"},
};

}  // namespace

std::string format_flags(std::uint32_t flags) {
  std::string out;
  for (auto [flag, name] : kFlagNames) {
    if (flags & flag) {
      if (!out.empty()) out += '|';
      out += name;
    }
  }
  return out;
}

std::uint32_t parse_flags(const std::string& text) {
  std::uint32_t flags = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto bar = text.find('|', pos);
    const std::string name = text.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos);
    bool found = false;
    for (auto [flag, flag_name] : kFlagNames) {
      if (name == flag_name) {
        flags |= flag;
        found = true;
      }
    }
    if (!found && !name.empty()) throw Error(ErrorCode::format, "unknown beat flag '" + name + "'");
    if (bar == std::string::npos) break;
    pos = bar + 1;
  }
  return flags;
}

std::vector<FlowPeak> detect_flow_peaks(const EnvelopeTrace& trace, const PeakParams& params) {
  validate(params);
  std::vector<FlowPeak> peaks;
  const std::size_t n = trace.size();
  if (n < 3) return peaks;
  auto v = [&](std::size_t i) { return trace.samples[i].velocity; };
  auto t = [&](double fractional_index) {
    const auto i = static_cast<std::size_t>(std::floor(fractional_index));
    if (i + 1 >= n) return trace.samples[n - 1].time;
    const double f = fractional_index - static_cast<double>(i);
    return trace.samples[i].time + f * (trace.samples[i + 1].time - trace.samples[i].time);
  };

  for (std::size_t i = 1; i + 1 < n;) {
    if (!(v(i) > v(i - 1))) { ++i; continue; }
    std::size_t plateau_end = i;
    while (plateau_end + 1 < n && v(plateau_end + 1) == v(i)) ++plateau_end;
    if (plateau_end + 1 >= n || !(v(plateau_end + 1) < v(i))) {
      i = plateau_end + 1;
      continue;
    }
    const std::size_t peak = (i + plateau_end) / 2;
    const double height = v(peak);

    std::size_t left = i;
    double left_min = height;
    std::size_t left_base = i;
    while (left > 0) {
      --left;
      if (v(left) > height) break;
      if (v(left) < left_min) {
        left_min = v(left);
        left_base = left;
      }
    }
    std::size_t right = plateau_end;
    double right_min = height;
    std::size_t right_base = plateau_end;
    while (right + 1 < n) {
      ++right;
      if (v(right) > height) break;
      if (v(right) < right_min) {
        right_min = v(right);
        right_base = right;
      }
    }
    const double prominence = height - std::max(left_min, right_min);
    const double level = height - prominence / 2.0;

    double left_x = static_cast<double>(left_base);
    for (std::size_t k = peak; k > left_base; --k) {
      if (v(k - 1) <= level) {
        left_x = static_cast<double>(k - 1) + (level - v(k - 1)) / (v(k) - v(k - 1));
        break;
      }
    }
    double right_x = static_cast<double>(right_base);
    for (std::size_t k = peak; k < right_base; ++k) {
      if (v(k + 1) <= level) {
        right_x = static_cast<double>(k) + (v(k) - level) / (v(k) - v(k + 1));
        break;
      }
    }
    const double width = t(right_x) - t(left_x);
    if (height > 0.0 && prominence >= params.min_prominence && width >= params.min_width_ms) {
      peaks.push_back({peak, trace.samples[peak].time, height, prominence, width});
    }
    i = plateau_end + 1;
  }
  return peaks;
}

std::vector<FlowPeak> refine_peaks(const EnvelopeTrace& trace, std::vector<FlowPeak> peaks, std::size_t radius) {
  for (auto& p : peaks) {
    const std::size_t lo = p.index > radius ? p.index - radius : 0;
    const std::size_t hi = std::min(trace.size() - 1, p.index + radius);
    std::size_t best = p.index;
    for (std::size_t k = lo; k <= hi; ++k) {
      const double vk = trace.samples[k].velocity;
      const double vb = trace.samples[best].velocity;
      const auto dist = [&](std::size_t a) { return a > p.index ? a - p.index : p.index - a; };
      if (vk > vb || (vk == vb && dist(k) < dist(best))) best = k;
    }
    p.index = best;
    p.time = trace.samples[best].time;
    p.velocity = trace.samples[best].velocity;
  }
  return peaks;
}

std::vector<LabeledBeat> label_beats(const std::vector<FlowPeak>& peaks, const QrsMarks& qrs) {
  if (qrs.times.size() < 2) {
    throw Error(ErrorCode::labeling, "need at least 2 QRS marks to bound a beat, found " +
                                         std::to_string(qrs.times.size()), "labeling");
  }
  std::vector<LabeledBeat> beats;
  for (std::size_t w = 0; w + 1 < qrs.times.size(); ++w) {
    const double start = qrs.times[w];
    const double end = qrs.times[w + 1];
    std::vector<const FlowPeak*> inside;
    for (const auto& p : peaks) {
      if (p.time >= start && p.time < end) inside.push_back(&p);
    }
    if (inside.empty()) continue;
    LabeledBeat beat;
    beat.beat = static_cast<int>(w);
    beat.window_start = start;
    beat.window_end = end;
    if (inside.size() == 1) {
      beat.e = *inside.front();
    } else {
      beat.a = *inside.back();
      const auto largest = std::max_element(inside.begin(), inside.end() - 1, [](const FlowPeak* a, const FlowPeak* b) {
        return a->velocity < b->velocity;
      });
      beat.e = **largest;
    }
    beats.push_back(beat);
  }
  return beats;
}

DtResult deceleration_time(const EnvelopeTrace& trace, const FlowPeak& e_peak, const DtParams& params) {
  validate(params);
  DtResult result;
  const std::size_t n = trace.size();
  if (n < 3) {
    result.flags |= kDescentTruncated;
    return result;
  }
  const double step = trace.step_ms();
  std::size_t peak = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(trace.samples[i].time - e_peak.time) < std::abs(trace.samples[peak].time - e_peak.time)) peak = i;
  }
  const double e_velocity = e_peak.velocity;
  const auto skip = static_cast<std::size_t>(std::ceil(params.skip_ms / step - 1e-9));
  std::optional<std::size_t> point;
  std::size_t i = std::max<std::size_t>(peak + skip, 1);
  for (; i + 1 < n; ++i) {
    const double d2 = (trace.samples[i + 1].velocity - 2.0 * trace.samples[i].velocity + trace.samples[i - 1].velocity) /
                      (step * step);
    if (std::abs(d2) > params.curvature_threshold) {
      point = i;
      break;
    }
    if (trace.samples[i].velocity <= 0.05 * e_velocity) {
      point = i;
      result.flags |= kNoSlopeChange;
      break;
    }
  }
  result.end_index = std::min(i, n - 1);
  if (!point) {
    result.flags |= kDescentTruncated;
    return result;
  }
  const VelocitySample second = trace.samples[*point];
  result.slope_point = second;
  if (!(second.velocity < e_velocity)) {
    result.flags |= kDescentTruncated;
    return result;
  }
  const double dt = e_velocity * (second.time - e_peak.time) / (e_velocity - second.velocity);
  if (dt > 0.0) {
    result.dt = dt;
  } else {
    result.flags |= kDescentTruncated;
  }
  return result;
}

namespace {

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::optional<double> field_mean(std::vector<double> values, bool exclude_outliers) {
  if (values.empty()) return std::nullopt;
  if (exclude_outliers && values.size() >= 3) {
    const double med = median_of(values);
    std::vector<double> dev;
    for (double v : values) dev.push_back(std::abs(v - med));
    const double mad = median_of(dev);
    if (mad > 0.0) {
      std::erase_if(values, [&](double v) { return std::abs(v - med) > 2.0 * mad; });
    }
  }
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

StudyMeans aggregate(const std::vector<BeatMeasurement>& beats, const AggregateOptions& options) {
  if (beats.empty()) throw Error(ErrorCode::aggregate, "no beats to aggregate", "aggregation");
  std::vector<double> e, a, ea, dt;
  for (const auto& b : beats) {
    e.push_back(b.e_velocity);
    if (!b.has(kFusedEa)) {
      if (b.a_velocity) a.push_back(*b.a_velocity);
      if (b.ea_ratio) ea.push_back(*b.ea_ratio);
    }
    if (b.dt) dt.push_back(*b.dt);
  }
  StudyMeans m;
  m.mean_e = field_mean(e, options.exclude_outliers);
  m.mean_a = field_mean(a, options.exclude_outliers);
  m.mean_ea = field_mean(ea, options.exclude_outliers);
  m.mean_dt = field_mean(dt, options.exclude_outliers);
  return m;
}

std::vector<BeatMeasurement> measure_trace(const EnvelopeTrace& trace, const QrsMarks& qrs,
                                           const MeasureOptions& options) {
  const EnvelopeTrace cleaned = suppress_spikes(trace, options.spikes);
  const EnvelopeTrace smoothed = smooth_trace(cleaned, options.smoothing_ms);
  auto peaks = detect_flow_peaks(smoothed, options.peaks);
  const auto half_window = static_cast<std::size_t>(std::lround(options.smoothing_ms / trace.step_ms()) / 2);
  peaks = refine_peaks(cleaned, std::move(peaks), half_window + 1);

  std::vector<BeatMeasurement> beats;
  for (const auto& lb : label_beats(peaks, qrs)) {
    BeatMeasurement m;
    m.beat = lb.beat;
    m.e_velocity = lb.e.velocity;
    m.e_time = lb.e.time;
    if (lb.a) {
      m.a_velocity = lb.a->velocity;
      m.a_time = lb.a->time;
      m.ea_ratio = lb.e.velocity / lb.a->velocity;
    } else {
      m.flags |= kFusedEa | kMissingA;
    }
    const DtResult dt = deceleration_time(smoothed, lb.e, options.dt);
    m.dt = dt.dt;
    m.slope_point = dt.slope_point;
    m.flags |= dt.flags;
    for (std::size_t k = lb.e.index; k <= dt.end_index && k < trace.gap_flags.size(); ++k) {
      if (trace.gap_flags[k]) {
        m.flags |= kGapInDescent;
        break;
      }
    }
    beats.push_back(m);
  }
  return beats;
}

namespace {

template <class F>
auto run_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw Error(e.code(), e.what(), name);
  }
}

}  // namespace

StudyAnalysis analyze_study(const RasterImage& image, const CalibrationManifest& manifest,
                            const MeasureOptions& options) {
  run_stage("ingestion", [&] {
    validate_manifest(manifest, std::pair{image.width(), image.height()});
    const auto decision = route_image(manifest);
    if (!decision.accepted) {
      throw Error(ErrorCode::rejected, "image label '" + decision.label + "' is not mitral_inflow");
    }
    return 0;
  });

  StudyAnalysis out;
  const EnvelopeMask mask = run_stage("segmentation", [&] {
    return options.mask_path ? import_mask(*options.mask_path, manifest)
                             : segment_envelope_threshold(image, manifest, options.segmentation);
  });
  out.trace = run_stage("segmentation", [&] { return mask_to_trace(mask, manifest); });
  out.smoothed = run_stage("segmentation", [&] {
    return smooth_trace(suppress_spikes(out.trace, options.spikes), options.smoothing_ms);
  });
  out.qrs = run_stage("ecg", [&] {
    return detect_qrs(extract_ecg(image, manifest), options.qrs, manifest);
  });
  out.result.beats = run_stage("measurement", [&] { return measure_trace(out.trace, out.qrs, options); });
  out.result.n_beats = out.result.beats.size();
  if (!out.result.beats.empty()) out.result.means = aggregate(out.result.beats, options.aggregation);
  return out;
}

StudyResult measure_study(const RasterImage& image, const CalibrationManifest& manifest,
                          const MeasureOptions& options) {
  return analyze_study(image, manifest, options).result;
}

}  // namespace mitral
