#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mitral/cli.hpp"
#include "mitral/image.hpp"
#include "mitral/segmentation.hpp"
#include "mitral/synth.hpp"

namespace mitral::test {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("mitral_" + tag + "_" + std::to_string(rng() % 1000000) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"mitral"};
  for (const auto& s : args) argv.push_back(s.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Trace sampled from f(t) every `step` ms; no gaps.
inline EnvelopeTrace make_trace(std::size_t n, double step, const std::function<double(double)>& f) {
  EnvelopeTrace t;
  t.samples.resize(n);
  t.gap_flags.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double time = static_cast<double>(i) * step;
    t.samples[i] = {time, f(time)};
  }
  return t;
}

/// Triangle with apex `peak` at `apex` ms, linear flanks of the given durations.
inline double triangle(double t, double apex, double peak, double rise, double fall) {
  if (t <= apex - rise || t >= apex + fall) return 0.0;
  if (t <= apex) return peak * (t - (apex - rise)) / rise;
  return peak * ((apex + fall) - t) / fall;
}

/// Layout with E and A peaks half an RR interval apart and as many beats as fit.
inline SynthParams even_spacing_params(double hr, double e, double a, double dt) {
  SynthParams p;
  p.heart_rate = hr;
  p.e_velocity = e;
  p.a_velocity = a;
  p.dt_ms = dt;
  p.e_rise_ms = 40.0;
  p.a_rise_ms = 40.0;
  p.a_fall_ms = 40.0;
  const double rr = 60000.0 / hr;
  p.e_onset_ms = rr / 2.0 - p.a_qrs_gap_ms - p.a_fall_ms - p.e_rise_ms;
  const double span = (p.spectral_region.width() - 1) * p.time_scale;
  p.n_beats = static_cast<int>(std::floor((span - p.lead_in_ms - 40.0) / rr));
  return p;
}

}  // namespace mitral::test
