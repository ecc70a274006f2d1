#include "mitral/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "mitral/calibration.hpp"
#include "mitral/error.hpp"
#include "mitral/image.hpp"

namespace mitral {

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);  // no "-0.000"
  return s;
}

std::string format_fixed(const std::optional<double>& value, int decimals) {
  return value ? format_fixed(*value, decimals) : std::string{};
}

std::string format_study_csv(const StudyResult& result) {
  std::ostringstream out;
  out << kStudyCsvHeader << "\n";
  for (const auto& b : result.beats) {
    out << b.beat << "," << format_fixed(b.e_velocity, 3) << "," << format_fixed(b.a_velocity, 3) << ","
        << format_fixed(b.ea_ratio, 3) << "," << format_fixed(b.dt, 1) << "," << format_fixed(b.e_time, 1) << ","
        << format_fixed(b.a_time, 1) << "," << format_flags(b.flags) << "\n";
  }
  const auto& m = result.means;
  out << "mean," << format_fixed(m.mean_e, 3) << "," << format_fixed(m.mean_a, 3) << ","
      << format_fixed(m.mean_ea, 3) << "," << format_fixed(m.mean_dt, 1) << ",,,n_beats=" << result.n_beats << "\n";
  return out.str();
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::optional<double> optional_real(const std::string& field, const std::string& source) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw Error(ErrorCode::format, source + ": bad number '" + field + "'");
  return v;
}

}  // namespace

std::vector<BeatMeasurement> parse_study_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::format, source + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kStudyCsvHeader) throw Error(ErrorCode::format, source + ": unexpected header '" + line + "'");
  std::vector<BeatMeasurement> beats;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 8) throw Error(ErrorCode::format, source + ": expected 8 fields in '" + line + "'");
    if (f[0] == "mean") continue;
    BeatMeasurement m;
    const auto beat = optional_real(f[0], source);
    const auto e = optional_real(f[1], source);
    const auto e_time = optional_real(f[5], source);
    if (!beat || !e || !e_time) throw Error(ErrorCode::format, source + ": beat, e_mps and e_time_ms are required");
    m.beat = static_cast<int>(*beat);
    m.e_velocity = *e;
    m.a_velocity = optional_real(f[2], source);
    m.ea_ratio = optional_real(f[3], source);
    m.dt = optional_real(f[4], source);
    m.e_time = *e_time;
    m.a_time = optional_real(f[6], source);
    m.flags = parse_flags(f[7]);
    beats.push_back(m);
  }
  return beats;
}

std::string study_id(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  return name.substr(0, name.find('.'));
}

MeasurementSet load_measurements(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  MeasurementSet set;
  auto load_one = [&](const fs::path& file) {
    const auto bytes = read_file(file);
    auto beats = parse_study_csv(std::string(bytes.begin(), bytes.end()), file.string());
    auto& slot = set[study_id(file)];
    slot.insert(slot.end(), beats.begin(), beats.end());
  };
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) load_one(f);
  } else {
    load_one(path);
  }
  return set;
}

std::string format_agreement_csv(const std::vector<AgreementRow>& rows) {
  std::ostringstream out;
  out << kAgreementCsvHeader << "\n";
  for (const auto& row : rows) {
    out << to_string(row.field) << "," << row.n;
    if (row.stats) {
      const auto& s = *row.stats;
      out << "," << format_fixed(s.bias, 6) << "," << format_fixed(s.sd, 6) << "," << format_fixed(s.loa_low, 6)
          << "," << format_fixed(s.loa_high, 6) << "," << format_fixed(s.pearson_r, 6) << ","
          << format_fixed(s.r_squared, 6);
    } else {
      out << ",,,,,,";
    }
    out << "\n";
  }
  return out.str();
}

std::string format_ecg_csv(const EcgSignal& signal, const CalibrationManifest& manifest) {
  std::ostringstream out;
  out << "time_ms,amplitude_px,valid\n";
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const double t = (signal.first_column + static_cast<double>(i) - manifest.spectral_region.x0) * manifest.time_scale;
    out << format_fixed(t, 1) << "," << format_fixed(signal.samples[i], 3) << "," << (signal.valid_flags[i] ? 1 : 0)
        << "\n";
  }
  return out.str();
}

}  // namespace mitral
