#include "mitral/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "mitral/error.hpp"

namespace mitral {

const std::vector<std::string>& known_labels() {
  static const std::vector<std::string> labels = {
      "LVOT",          "RVOT",           "SVC",
      "mitral_inflow_CW", "abd_aorta",   "aortic_regurge",
      "aortic_right_parasternal", "aortic_valve", "desc_aorta",
      "hepatic_vein",  "mitral_TDI_lat", "mitral_TDI_med",
      "mitral_inflow", "mitral_regurge", "pulm_valve",
      "pulm_vein",     "tricuspid_regurge", "tricuspid_TDI",
      "2D",            "3D",             "UI",
      "strain",
  };
  return labels;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class FieldParser {
 public:
  explicit FieldParser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw Error(ErrorCode::manifest, source_ + ": " + key + ": " + why);
  }

  double real(const std::string& key, std::string_view v) const {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end || !std::isfinite(out)) fail(key, "not a number: '" + std::string(v) + "'");
    return out;
  }

  int integer(const std::string& key, std::string_view v) const {
    v = trim(v);
    int out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) fail(key, "not an integer: '" + std::string(v) + "'");
    return out;
  }

  template <std::size_t N>
  std::array<int, N> integers(const std::string& key, std::string_view v) const {
    std::array<int, N> out{};
    std::size_t i = 0;
    while (true) {
      const auto comma = v.find(',');
      if (i >= N) fail(key, "expected " + std::to_string(N) + " comma-separated integers");
      out[i++] = integer(key, v.substr(0, comma));
      if (comma == std::string_view::npos) break;
      v.remove_prefix(comma + 1);
    }
    if (i != N) fail(key, "expected " + std::to_string(N) + " comma-separated integers");
    return out;
  }

  bool boolean(const std::string& key, std::string_view v) const {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(key, "expected true or false");
  }

 private:
  std::string source_;
};

}  // namespace

CalibrationManifest parse_manifest(std::string_view text, const std::string& source) {
  std::map<std::string, std::string, std::less<>> entries;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::manifest, source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    if (entries.count(key)) throw Error(ErrorCode::manifest, source + ": duplicate key '" + key + "'");
    entries.emplace(std::move(key), std::string(trim(line.substr(eq + 1))));
  }

  static const std::vector<std::string> required = {"label", "velocity_scale", "time_scale", "baseline_row",
                                                    "spectral_region", "flow_above_baseline", "ecg_region"};
  static const std::vector<std::string> optional = {"ecg_color", "ecg_color_tolerance"};
  for (const auto& [key, value] : entries) {
    if (std::find(required.begin(), required.end(), key) == required.end() &&
        std::find(optional.begin(), optional.end(), key) == optional.end()) {
      throw Error(ErrorCode::manifest, source + ": unknown key '" + key + "'");
    }
  }
  for (const auto& key : required) {
    if (!entries.count(key)) throw Error(ErrorCode::manifest, source + ": missing required key '" + key + "'");
  }

  FieldParser p(source);
  CalibrationManifest m;
  m.label = entries.at("label");
  if (m.label.empty()) p.fail("label", "empty");
  m.velocity_scale = p.real("velocity_scale", entries.at("velocity_scale"));
  m.time_scale = p.real("time_scale", entries.at("time_scale"));
  m.baseline_row = p.integer("baseline_row", entries.at("baseline_row"));
  const auto sr = p.integers<4>("spectral_region", entries.at("spectral_region"));
  m.spectral_region = {sr[0], sr[1], sr[2], sr[3]};
  m.flow_above_baseline = p.boolean("flow_above_baseline", entries.at("flow_above_baseline"));
  const auto er = p.integers<4>("ecg_region", entries.at("ecg_region"));
  m.ecg_region = {er[0], er[1], er[2], er[3]};
  if (auto it = entries.find("ecg_color"); it != entries.end()) {
    const auto c = p.integers<3>("ecg_color", it->second);
    for (int v : c) {
      if (v < 0 || v > 255) p.fail("ecg_color", "channel out of range 0-255");
    }
    m.ecg_color = {static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]), static_cast<std::uint8_t>(c[2])};
  }
  if (auto it = entries.find("ecg_color_tolerance"); it != entries.end()) {
    m.ecg_color_tolerance = p.integer("ecg_color_tolerance", it->second);
  }
  validate_manifest(m, std::nullopt, source);
  return m;
}

void validate_manifest(const CalibrationManifest& m, std::optional<std::pair<int, int>> image_size,
                       const std::string& source) {
  auto fail = [&](const std::string& why) { throw Error(ErrorCode::manifest, source + ": " + why); };
  if (!(m.velocity_scale > 0.0) || !std::isfinite(m.velocity_scale)) fail("velocity_scale must be > 0");
  if (!(m.time_scale > 0.0) || !std::isfinite(m.time_scale)) fail("time_scale must be > 0");
  for (const auto& [name, r] : {std::pair{"spectral_region", m.spectral_region}, std::pair{"ecg_region", m.ecg_region}}) {
    if (r.x0 < 0 || r.y0 < 0) fail(std::string(name) + " has negative coordinates");
    if (r.x0 > r.x1 || r.y0 > r.y1) fail(std::string(name) + " requires x0 <= x1 and y0 <= y1");
    if (image_size && (r.x1 >= image_size->first || r.y1 >= image_size->second)) {
      fail(std::string(name) + " out of image bounds " + std::to_string(image_size->first) + "x" +
           std::to_string(image_size->second));
    }
  }
  if (!m.spectral_region.contains_row(m.baseline_row)) fail("baseline_row outside spectral_region rows");
  if (m.ecg_color_tolerance < 0 || m.ecg_color_tolerance > 255) fail("ecg_color_tolerance must be in 0-255");
}

CalibrationManifest load_manifest(const std::filesystem::path& path, std::optional<std::pair<int, int>> image_size) {
  const auto bytes = read_file(path);
  auto m = parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
  if (image_size) validate_manifest(m, image_size, path.string());
  return m;
}

std::string format_manifest(const CalibrationManifest& m) {
  std::ostringstream out;
  auto real = [](double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  };
  auto region = [](const Region& r) {
    return std::to_string(r.x0) + "," + std::to_string(r.y0) + "," + std::to_string(r.x1) + "," + std::to_string(r.y1);
  };
  out << "label = " << m.label << "\n"
      << "velocity_scale = " << real(m.velocity_scale) << "\n"
      << "time_scale = " << real(m.time_scale) << "\n"
      << "baseline_row = " << m.baseline_row << "\n"
      << "spectral_region = " << region(m.spectral_region) << "\n"
      << "flow_above_baseline = " << (m.flow_above_baseline ? "true" : "false") << "\n"
      << "ecg_color = " << int(m.ecg_color.r) << "," << int(m.ecg_color.g) << "," << int(m.ecg_color.b) << "\n"
      << "ecg_color_tolerance = " << m.ecg_color_tolerance << "\n"
      << "ecg_region = " << region(m.ecg_region) << "\n";
  return out.str();
}

RouteDecision route_image(const CalibrationManifest& manifest) {
  const auto& labels = known_labels();
  if (std::find(labels.begin(), labels.end(), manifest.label) == labels.end()) {
    throw Error(ErrorCode::unknown_label, "unknown image label '" + manifest.label + "'", "ingestion");
  }
  return {manifest.label == kMitralInflowLabel, manifest.label};
}

}  // namespace mitral
