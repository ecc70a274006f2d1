#include "mitral/stats.hpp"

#include <cmath>
#include <numeric>

#include "mitral/error.hpp"

namespace mitral {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::stats, "series lengths differ", "stats");
  if (a.size() < 2) throw Error(ErrorCode::stats, "need at least 2 pairs", "stats");
}

double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

struct Moments {
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
};

Moments centred_moments(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a);
  const double mb = mean(b);
  Moments m;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    m.sxx += da * da;
    m.syy += db * db;
    m.sxy += da * db;
  }
  if (!(m.sxx > 0.0) || !(m.syy > 0.0)) {
    throw Error(ErrorCode::stats, "correlation undefined for a constant series", "stats");
  }
  return m;
}

}  // namespace

BlandAltman bland_altman(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  BlandAltman out;
  out.bias = mean(d);
  double ss = 0.0;
  for (double x : d) ss += (x - out.bias) * (x - out.bias);
  out.sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
  out.loa_low = out.bias - 2.0 * out.sd;
  out.loa_high = out.bias + 2.0 * out.sd;
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const Moments m = centred_moments(a, b);
  return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

double r_squared(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const Moments m = centred_moments(a, b);
  const double slope = m.sxy / m.sxx;
  const double intercept = mean(b) - slope * mean(a);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = b[i] - (intercept + slope * a[i]);
    ss_res += r * r;
  }
  return std::clamp(1.0 - ss_res / m.syy, 0.0, 1.0);
}

const char* to_string(Field field) {
  switch (field) {
    case Field::e: return "E";
    case Field::a: return "A";
    case Field::ea: return "EA";
    case Field::dt: return "DT";
  }
  return "?";
}

namespace {

std::optional<double> field_value(const BeatMeasurement& m, Field field) {
  switch (field) {
    case Field::e: return m.e_velocity;
    case Field::a: return m.a_velocity;
    case Field::ea: return m.ea_ratio;
    case Field::dt: return m.dt;
  }
  return std::nullopt;
}

}  // namespace

MeasurementSet per_study_means(const MeasurementSet& set) {
  MeasurementSet out;
  for (const auto& [study, beats] : set) {
    if (beats.empty()) continue;
    const StudyMeans means = aggregate(beats);
    BeatMeasurement m;
    m.e_velocity = means.mean_e.value_or(0.0);
    m.a_velocity = means.mean_a;
    m.ea_ratio = means.mean_ea;
    m.dt = means.mean_dt;
    out[study] = {m};
  }
  return out;
}

AgreementStats compare(const MeasurementSet& reference, const MeasurementSet& test, Field field) {
  const MeasurementSet& a = test;
  const MeasurementSet& b = reference;
  std::vector<double> xs, ys;
  std::size_t dropped = 0;
  std::size_t overlapping = 0;
  auto index = [](const std::vector<BeatMeasurement>& beats) {
    std::map<int, const BeatMeasurement*> out;
    for (const auto& m : beats) out[m.beat] = &m;
    return out;
  };
  for (const auto& [study, beats_a] : a) {
    const auto it = b.find(study);
    if (it == b.end()) {
      dropped += beats_a.size();
      continue;
    }
    const auto ib = index(it->second);
    for (const auto& [beat, ma] : index(beats_a)) {
      const auto jt = ib.find(beat);
      if (jt == ib.end()) {
        ++dropped;
        continue;
      }
      ++overlapping;
      const auto va = field_value(*ma, field);
      const auto vb = field_value(*jt->second, field);
      if (!va || !vb) {
        ++dropped;
        continue;
      }
      xs.push_back(*va);
      ys.push_back(*vb);
    }
  }
  for (const auto& [study, beats_b] : b) {
    const auto it = a.find(study);
    if (it == a.end()) {
      dropped += beats_b.size();
      continue;
    }
    const auto ia = index(it->second);
    for (const auto& m : beats_b) {
      if (!ia.count(m.beat)) ++dropped;
    }
  }
  if (overlapping == 0) throw Error(ErrorCode::stats, "no overlapping (study, beat) keys", "stats");

  AgreementStats s;
  s.field = field;
  s.n = xs.size();
  s.dropped = dropped;
  if (s.n < 2) throw Error(ErrorCode::stats, std::string("fewer than 2 pairs for field ") + to_string(field), "stats");
  const BlandAltman ba = bland_altman(xs, ys);
  s.bias = ba.bias;
  s.sd = ba.sd;
  s.loa_low = ba.loa_low;
  s.loa_high = ba.loa_high;
  try {
    s.pearson_r = pearson(xs, ys);
    s.r_squared = r_squared(xs, ys);
  } catch (const Error&) {
    // constant series: correlation undefined
  }
  return s;
}

}  // namespace mitral
