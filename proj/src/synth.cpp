#include "mitral/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mitral/calibration.hpp"
#include "mitral/error.hpp"

namespace mitral {

double UnitRng::next() {
  // splitmix64
  state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

CalibrationManifest synth_manifest(const SynthParams& p) {
  CalibrationManifest m;
  m.label = p.label;
  m.velocity_scale = p.velocity_scale;
  m.time_scale = p.time_scale;
  m.baseline_row = p.baseline_row;
  m.spectral_region = p.spectral_region;
  m.flow_above_baseline = p.flow_above_baseline;
  m.ecg_color = p.ecg_color;
  m.ecg_color_tolerance = 60;
  m.ecg_region = p.ecg_region;
  return m;
}

namespace {

struct Wave {
  double onset = 0.0;
  double peak_time = 0.0;
  double peak = 0.0;
  double knee_time = 0.0;  // equals end when there is no knee
  double knee = 0.0;
  double end = 0.0;

  double at(double t) const {
    if (t <= onset || t >= end) return 0.0;
    if (t <= peak_time) return peak_time == onset ? peak : peak * (t - onset) / (peak_time - onset);
    if (t <= knee_time) return peak + (knee - peak) * (t - peak_time) / (knee_time - peak_time);
    return knee * (end - t) / (end - knee_time);
  }
};

struct Layout {
  std::vector<double> qrs;
  std::vector<Wave> waves;
  std::vector<TruthBeat> beats;
};

double snap(double t, double step) { return std::round(t / step) * step; }

Wave triangle(double onset, double peak_time, double peak, double end) {
  return {onset, peak_time, peak, end, 0.0, end};
}

Layout layout(const SynthParams& p) {
  auto invalid = [](const std::string& why) { throw Error(ErrorCode::invalid_params, why, "synth"); };
  if (!(p.e_velocity > 0.0)) invalid("e_velocity must be > 0");
  if (!(p.a_velocity >= 0.0)) invalid("a_velocity must be >= 0");
  if (!(p.dt_ms > 0.0)) invalid("dt must be > 0");
  if (!(p.heart_rate >= 30.0 && p.heart_rate <= 220.0)) invalid("heart_rate must be in [30, 220]");
  if (p.n_beats < 1) invalid("n_beats must be >= 1");
  if (!(p.noise_sigma >= 0.0 && p.noise_sigma <= 1.0)) invalid("noise_sigma must be in [0, 1]");
  if (!(p.dt_second_slope_fraction >= 0.0 && p.dt_second_slope_fraction < 1.0)) {
    invalid("dt_second_slope_fraction must be in [0, 1)");
  }
  if (!(p.second_slope_ratio > 0.0 && p.second_slope_ratio <= 1.0)) invalid("second_slope_ratio must be in (0, 1]");
  if (!(p.e_rise_ms > 0.0 && p.a_rise_ms > 0.0 && p.a_fall_ms > 0.0)) invalid("wave durations must be > 0");
  if (!(p.a_qrs_gap_ms >= p.time_scale / 2.0)) invalid("a_qrs_gap_ms must be at least half a column");
  if (p.e_onset_ms && !(*p.e_onset_ms >= 0.0)) invalid("e_onset_ms must be >= 0");
  validate_manifest(synth_manifest(p), std::pair{p.image_width, p.image_height}, "synth");

  const double room_rows = p.flow_above_baseline ? p.baseline_row - p.spectral_region.y0
                                                 : p.spectral_region.y1 - p.baseline_row;
  const double room = room_rows * p.velocity_scale;
  if (p.e_velocity > room || p.a_velocity > room) invalid("velocity exceeds the spectral display range");

  const double step = p.time_scale;
  const double rr = 60000.0 / p.heart_rate;
  const double span = (p.spectral_region.width() - 1) * step;
  Layout out;
  for (int k = 0; k <= p.n_beats; ++k) out.qrs.push_back(snap(p.lead_in_ms + k * rr, step));
  if (out.qrs.back() + 20.0 > span) {
    std::ostringstream msg;
    msg << p.n_beats << " beats at " << p.heart_rate << " bpm do not fit in " << span << " ms";
    invalid(msg.str());
  }

  auto a_wave = [&](double next_qrs) {
    const double peak_time = snap(next_qrs - p.a_qrs_gap_ms - p.a_fall_ms, step);
    return triangle(peak_time - p.a_rise_ms, peak_time, p.a_velocity, peak_time + p.a_fall_ms);
  };

  if (p.a_velocity > 0.0) {
    const Wave lead = a_wave(out.qrs.front());
    if (lead.onset >= 0.0) out.waves.push_back(lead);
  }

  const double f = p.dt_second_slope_fraction;
  for (int k = 0; k < p.n_beats; ++k) {
    const double q = out.qrs[k];
    const double next = out.qrs[k + 1];
    const double onset_delay = p.e_onset_ms ? *p.e_onset_ms : 0.3 * rr;
    Wave e;
    e.peak_time = snap(q + onset_delay + p.e_rise_ms, step);
    e.onset = e.peak_time - p.e_rise_ms;
    e.peak = p.e_velocity;
    e.knee_time = e.peak_time + (1.0 - f) * p.dt_ms;
    e.knee = f * p.e_velocity;
    e.end = f > 0.0 ? e.knee_time + f * p.dt_ms / p.second_slope_ratio : e.knee_time;

    TruthBeat beat;
    beat.e_velocity = p.e_velocity;
    beat.dt = p.dt_ms;
    beat.e_time = e.peak_time;
    beat.e_onset = e.onset;
    beat.e_end = e.end;

    std::ostringstream conflict;
    conflict << "beat " << k << ": E wave (" << e.onset << "-" << e.end << " ms) ";
    if (e.onset < q) {
      conflict << "starts before its QRS at " << q << " ms";
      throw Error(ErrorCode::synth_conflict, conflict.str(), "synth");
    }
    out.waves.push_back(e);
    if (p.a_velocity > 0.0) {
      const Wave a = a_wave(next);
      if (e.end > a.onset) {
        conflict << "overlaps A wave (" << a.onset << "-" << a.end << " ms) at " << p.heart_rate
                 << " bpm with DT " << p.dt_ms << " ms";
        throw Error(ErrorCode::synth_conflict, conflict.str(), "synth");
      }
      beat.a_velocity = p.a_velocity;
      beat.a_time = a.peak_time;
      beat.a_start = a.onset;
      beat.a_end = a.end;
      out.waves.push_back(a);
    } else if (e.end >= next) {
      conflict << "runs past the next QRS at " << next << " ms";
      throw Error(ErrorCode::synth_conflict, conflict.str(), "synth");
    }
    out.beats.push_back(beat);
  }
  return out;
}

double velocity_at(const Layout& l, double t) {
  double v = 0.0;
  for (const auto& w : l.waves) v = std::max(v, w.at(t));
  return v;
}

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

double ecg_amplitude(const std::vector<double>& qrs, double rr, double t) {
  constexpr double kRHeight = 40.0;
  constexpr double kRHalfWidth = 20.0;
  constexpr double kTHeight = 8.0;
  const double t_offset = 0.4 * rr;
  const double t_half = std::min(60.0, 0.15 * rr);
  double amp = 0.0;
  for (double q : qrs) {
    const double dr = std::abs(t - q);
    if (dr < kRHalfWidth) amp += kRHeight * (1.0 - dr / kRHalfWidth);
    const double dtw = t - (q + t_offset);
    if (std::abs(dtw) < t_half) amp += kTHeight * std::cos(0.5 * M_PI * dtw / t_half);
  }
  return amp;
}

}  // namespace

void validate(const SynthParams& params) { (void)layout(params); }

double analytic_velocity(const SynthParams& params, double time_ms) {
  return velocity_at(layout(params), time_ms);
}

SynthStudy generate_synthetic(const SynthParams& p) {
  const Layout l = layout(p);
  SynthStudy study;
  study.manifest = synth_manifest(p);
  const Region& sr = p.spectral_region;
  const int width = sr.width();
  const int height = sr.height();
  const int baseline_local = p.baseline_row - sr.y0;
  const int dir = p.flow_above_baseline ? -1 : 1;

  // Intensity plane of the spectral region; envelope brightest at the baseline.
  constexpr double kBackground = 25.0;
  std::vector<double> plane(static_cast<std::size_t>(width) * height, kBackground);
  auto cell = [&](int x, int y) -> double& { return plane[static_cast<std::size_t>(y) * width + x]; };
  auto in_rows = [&](int y) { return y >= 0 && y < height; };

  GroundTruth& truth = study.truth;
  truth.qrs_times = l.qrs;
  truth.beats = l.beats;
  truth.mask = EnvelopeMask(width, height);
  truth.envelope.samples.resize(width);
  truth.envelope.gap_flags.assign(width, false);
  for (int x = 0; x < width; ++x) {
    const double t = x * p.time_scale;
    const double v = velocity_at(l, t);
    truth.envelope.samples[x] = {t, v};
    const long h = std::lround(v / p.velocity_scale);
    for (long k = 0; k <= h; ++k) {
      const int y = baseline_local + dir * static_cast<int>(k);
      if (!in_rows(y)) break;
      const double frac = h > 0 ? static_cast<double>(k) / h : 0.0;
      cell(x, y) = 230.0 - 80.0 * frac;
      truth.mask.at(x, y) = 1;
    }
  }

  for (const auto& a : p.artifacts) {
    const int c0 = static_cast<int>(std::lround(a.time_ms / p.time_scale));
    const int cols = std::max(1, static_cast<int>(std::lround(a.width_ms / p.time_scale)));
    for (int x = std::max(0, c0); x < std::min(width, c0 + cols); ++x) {
      switch (a.kind) {
        case SynthArtifact::Kind::spike: {
          const long h = std::lround(a.velocity / p.velocity_scale);
          for (long k = 0; k <= h; ++k) {
            const int y = baseline_local + dir * static_cast<int>(k);
            if (!in_rows(y)) break;
            cell(x, y) = 255.0;
          }
          break;
        }
        case SynthArtifact::Kind::dropout:
          for (int y = 0; y < height; ++y) cell(x, y) = kBackground;
          break;
        case SynthArtifact::Kind::alias_band: {
          const long depth = std::lround(a.velocity / p.velocity_scale);
          for (long k = 0; k < depth; ++k) {
            const int y = p.flow_above_baseline ? static_cast<int>(k) : height - 1 - static_cast<int>(k);
            if (!in_rows(y) || (p.flow_above_baseline ? y >= baseline_local - 1 : y <= baseline_local + 1)) break;
            cell(x, y) = 200.0;
          }
          break;
        }
      }
    }
  }

  RasterImage image(p.image_width, p.image_height);
  UnitRng rng(p.seed);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = cell(x, y);
      if (p.noise_sigma > 0.0) v *= 1.0 + p.noise_sigma * (2.0 * rng.next() - 1.0);
      const std::uint8_t g = clamp_u8(v);
      image.at(sr.x0 + x, sr.y0 + y) = {g, g, g};
    }
  }

  const Region& er = p.ecg_region;
  const double rr = 60000.0 / p.heart_rate;
  const double ecg_base = er.y0 + 0.75 * (er.y1 - er.y0);
  truth.ecg_rows.resize(er.width());
  for (int i = 0; i < er.width(); ++i) {
    const int col = er.x0 + i;
    const double t = (col - sr.x0) * p.time_scale;
    const double row = std::clamp(ecg_base - ecg_amplitude(l.qrs, rr, t), static_cast<double>(er.y0),
                                  static_cast<double>(er.y1));
    truth.ecg_rows[i] = row;
    image.at(col, static_cast<int>(std::lround(row))) = p.ecg_color;
  }

  study.image = std::move(image);
  return study;
}

std::vector<BeatMeasurement> truth_measurements(const GroundTruth& truth) {
  std::vector<BeatMeasurement> out;
  for (std::size_t i = 0; i < truth.beats.size(); ++i) {
    const auto& b = truth.beats[i];
    BeatMeasurement m;
    m.beat = static_cast<int>(i);
    m.e_velocity = b.e_velocity;
    m.e_time = b.e_time;
    m.dt = b.dt;
    if (b.a_velocity) {
      m.a_velocity = b.a_velocity;
      m.a_time = b.a_time;
      m.ea_ratio = b.e_velocity / *b.a_velocity;
    } else {
      m.flags |= kFusedEa | kMissingA;
    }
    out.push_back(m);
  }
  return out;
}

SynthParams sample_corpus_params(std::uint64_t seed, const CorpusRanges& r) {
  UnitRng rng(seed * 0x2545F4914F6CDD1Dull + 17);
  auto draw = [&](double lo, double hi) { return lo + (hi - lo) * rng.next(); };
  for (int attempt = 0; attempt < 10000; ++attempt) {
    SynthParams p;
    p.seed = seed;
    p.e_velocity = draw(r.e_min, r.e_max);
    p.a_velocity = draw(r.a_min, r.a_max);
    p.dt_ms = draw(r.dt_min, r.dt_max);
    p.heart_rate = draw(r.hr_min, r.hr_max);
    p.n_beats = r.n_beats;
    p.noise_sigma = r.noise_sigma;
    try {
      validate(p);
      return p;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::synth_conflict) throw;
    }
  }
  throw Error(ErrorCode::synth_conflict, "corpus ranges admit no collision-free study", "synth");
}

}  // namespace mitral

namespace mitral {

std::vector<double> synth_qrs_times(const SynthParams& params) { return layout(params).qrs; }

SynthParams with_beat_spikes(SynthParams params, std::uint64_t seed, double height_factor, double width_ms) {
  const auto qrs = synth_qrs_times(params);
  UnitRng rng(seed ^ 0xA5A5A5A5DEADBEEFull);
  for (std::size_t k = 0; k + 1 < qrs.size(); ++k) {
    const double lo = qrs[k] + 2.0 * params.time_scale;
    const double hi = qrs[k + 1] - 2.0 * params.time_scale;
    const double t = std::round((lo + (hi - lo) * rng.next()) / params.time_scale) * params.time_scale;
    params.artifacts.push_back({SynthArtifact::Kind::spike, t, width_ms, height_factor * params.e_velocity});
  }
  return params;
}

}  // namespace mitral
