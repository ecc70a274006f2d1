#include "mitral/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mitral/error.hpp"
#include "mitral/measurement.hpp"
#include "mitral/overlay.hpp"
#include "mitral/report.hpp"
#include "mitral/stats.hpp"
#include "mitral/synth.hpp"

namespace mitral {

namespace fs = std::filesystem;

namespace {

struct MeasureFlags {
  MeasureOptions options;
  std::string threshold_mode = "auto";
  std::string mask;
};

void add_measure_flags(CLI::App* cmd, MeasureFlags& f) {
  auto& o = f.options;
  cmd->add_option("--mask", f.mask, "External envelope mask (8-bit PGM) instead of thresholding");
  cmd->add_option("--median-window", o.segmentation.median_window, "Median filter length along each column (odd)")
      ->capture_default_str();
  cmd->add_option("--threshold-mode", f.threshold_mode, "Threshold mode")
      ->check(CLI::IsMember({"auto", "fixed"}))
      ->capture_default_str();
  cmd->add_option("--fixed-threshold", o.segmentation.fixed_threshold, "Gray level for --threshold-mode fixed")
      ->capture_default_str();
  cmd->add_option("--open-radius", o.segmentation.open_radius, "Opening radius (px)")->capture_default_str();
  cmd->add_option("--min-component-area", o.segmentation.min_component_area, "Smallest kept component (px^2)")
      ->capture_default_str();
  cmd->add_option("--smoothing-ms", o.smoothing_ms, "Envelope smoothing window (ms)")->capture_default_str();
  cmd->add_option("--spike-width-ms", o.spikes.max_width_ms, "Widest excursion treated as a spike (ms)")
      ->capture_default_str();
  cmd->add_option("--spike-height", o.spikes.min_height, "Spike height above the opened trace (m/s)")
      ->capture_default_str();
  cmd->add_option("--refractory-ms", o.qrs.refractory_ms, "QRS refractory period (ms)")->capture_default_str();
  cmd->add_option("--qrs-threshold", o.qrs.threshold_fraction,
                  "QRS threshold as a fraction of the 98th-percentile derivative energy")
      ->capture_default_str();
  cmd->add_option("--min-prominence", o.peaks.min_prominence, "Minimum peak prominence (m/s)")->capture_default_str();
  cmd->add_option("--min-width-ms", o.peaks.min_width_ms, "Minimum peak width at half prominence (ms)")
      ->capture_default_str();
  cmd->add_option("--curvature-threshold", o.dt.curvature_threshold, "Slope-change curvature threshold (m/s/ms^2)")
      ->capture_default_str();
  cmd->add_option("--skip-ms", o.dt.skip_ms, "Descent skipped after the E peak before slope-change search (ms)")
      ->capture_default_str();
  cmd->add_flag("--exclude-outliers", o.aggregation.exclude_outliers,
                "Drop beats more than 2 MAD from the per-field median when averaging");
}

MeasureOptions finish(const MeasureFlags& f) {
  MeasureOptions o = f.options;
  o.segmentation.threshold_mode = f.threshold_mode == "fixed" ? ThresholdMode::fixed : ThresholdMode::automatic;
  if (!f.mask.empty()) o.mask_path = f.mask;
  validate(o.segmentation);
  validate(o.qrs);
  validate(o.peaks);
  validate(o.dt);
  if (!(o.smoothing_ms > 0.0)) throw Error(ErrorCode::invalid_params, "smoothing window must be > 0");
  return o;
}

std::vector<fs::path> collect_images(const std::vector<std::string>& inputs) {
  std::vector<fs::path> images;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(in)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      images.insert(images.end(), found.begin(), found.end());
    } else {
      images.emplace_back(in);
    }
  }
  return images;
}

fs::path manifest_for(const fs::path& image, const std::string& explicit_manifest) {
  if (!explicit_manifest.empty()) return explicit_manifest;
  auto p = image;
  return p.replace_extension(".manifest");
}

std::string summary_line(const std::string& stem, const StudyResult& r) {
  const auto& m = r.means;
  return stem + ": n_beats=" + std::to_string(r.n_beats) + " mean_e=" + format_fixed(m.mean_e, 3) +
         " mean_a=" + format_fixed(m.mean_a, 3) + " mean_ea=" + format_fixed(m.mean_ea, 3) +
         " mean_dt=" + format_fixed(m.mean_dt, 1);
}

struct Loaded {
  RasterImage image;
  CalibrationManifest manifest;
  bool accepted = false;
};

Loaded load_study(const fs::path& image_path, const std::string& explicit_manifest) {
  Loaded l;
  l.image = load_image(image_path);
  l.manifest = load_manifest(manifest_for(image_path, explicit_manifest), std::pair{l.image.width(), l.image.height()});
  l.accepted = route_image(l.manifest).accepted;
  return l;
}

int cmd_analyze(const std::vector<std::string>& inputs, const std::string& manifest, const std::string& out_dir,
                bool ecg_csv, const MeasureFlags& flags, std::ostream& out, std::ostream& err) {
  const MeasureOptions options = finish(flags);
  const auto images = collect_images(inputs);
  if (images.empty()) {
    err << "analyze: no input images\n";
    return 1;
  }
  if (!manifest.empty() && images.size() > 1) {
    err << "analyze: --manifest requires a single input image\n";
    return 1;
  }
  fs::create_directories(out_dir);
  int measured = 0;
  int errors = 0;
  for (const auto& path : images) {
    const std::string stem = path.stem().string();
    try {
      const Loaded l = load_study(path, manifest);
      if (!l.accepted) {
        out << stem << ": rejected (label=" << l.manifest.label << ")\n";
        continue;
      }
      const StudyAnalysis a = analyze_study(l.image, l.manifest, options);
      write_file_atomic(fs::path(out_dir) / (stem + ".csv"), format_study_csv(a.result));
      if (ecg_csv) {
        write_file_atomic(fs::path(out_dir) / (stem + ".ecg.csv"),
                          format_ecg_csv(extract_ecg(l.image, l.manifest), l.manifest));
      }
      out << summary_line(stem, a.result) << "\n";
      ++measured;
    } catch (const std::exception& e) {
      err << path.string() << ": error: " << e.what() << "\n";
      ++errors;
    }
  }
  if (errors > 0) return 1;
  return measured > 0 ? 0 : 2;
}

std::vector<double> parse_numbers(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_params, std::string(what) + ": bad number '" + item + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (values.size() != expected) {
    throw Error(ErrorCode::invalid_params, std::string(what) + ": expected " + std::to_string(expected) + " values");
  }
  return values;
}

struct SynthFlags {
  SynthParams params;
  std::string out_dir = ".";
  std::string stem;
  std::string params_file;
  int corpus = 0;
  bool spikes_per_beat = false;
  bool write_mask = false;
  std::vector<std::string> spikes;
  std::vector<std::string> dropouts;
  std::vector<std::string> aliases;
};

void apply_params_file(SynthParams& p, const std::string& path) {
  const auto bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  const std::map<std::string, double*> reals = {
      {"e_velocity", &p.e_velocity},     {"a_velocity", &p.a_velocity},
      {"dt", &p.dt_ms},                  {"heart_rate", &p.heart_rate},
      {"dt_second_slope_fraction", &p.dt_second_slope_fraction},
      {"second_slope_ratio", &p.second_slope_ratio},
      {"noise_sigma", &p.noise_sigma},   {"velocity_scale", &p.velocity_scale},
      {"time_scale", &p.time_scale},
  };
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw Error(ErrorCode::invalid_params, path + ": expected 'key = value'");
      }
      continue;
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (auto it = reals.find(key); it != reals.end()) {
      *it->second = parse_numbers(value, 1, key.c_str())[0];
    } else if (key == "n_beats") {
      p.n_beats = static_cast<int>(parse_numbers(value, 1, "n_beats")[0]);
    } else if (key == "seed") {
      p.seed = static_cast<std::uint64_t>(parse_numbers(value, 1, "seed")[0]);
    } else if (key == "label") {
      p.label = value;
    } else {
      throw Error(ErrorCode::invalid_params, path + ": unknown key '" + key + "'");
    }
  }
}

void write_study(const SynthStudy& s, const fs::path& dir, const std::string& stem, bool write_mask,
                 std::ostream& out) {
  const auto image = dir / (stem + ".ppm");
  const auto manifest = dir / (stem + ".manifest");
  const auto truth = dir / (stem + ".truth.csv");
  save_image(s.image, image);
  write_file_atomic(manifest, format_manifest(s.manifest));
  StudyResult r;
  r.beats = truth_measurements(s.truth);
  r.n_beats = r.beats.size();
  r.means = aggregate(r.beats);
  write_file_atomic(truth, format_study_csv(r));
  out << image.string() << "\n" << manifest.string() << "\n" << truth.string() << "\n";
  if (write_mask) {
    const auto mask = dir / (stem + ".mask.pgm");
    save_gray(export_mask(s.truth.mask), mask);
    out << mask.string() << "\n";
  }
}

int cmd_synth(SynthFlags& f, std::ostream& out) {
  SynthParams base = f.params;
  if (!f.params_file.empty()) apply_params_file(base, f.params_file);
  for (const auto& s : f.spikes) {
    const auto v = parse_numbers(s, 3, "--spike");
    base.artifacts.push_back({SynthArtifact::Kind::spike, v[0], v[2], v[1]});
  }
  for (const auto& s : f.dropouts) {
    const auto v = parse_numbers(s, 2, "--dropout");
    base.artifacts.push_back({SynthArtifact::Kind::dropout, v[0], v[1], 0.0});
  }
  for (const auto& s : f.aliases) {
    const auto v = parse_numbers(s, 3, "--alias");
    base.artifacts.push_back({SynthArtifact::Kind::alias_band, v[0], v[1], v[2]});
  }
  fs::create_directories(f.out_dir);
  if (f.corpus > 0) {
    CorpusRanges ranges;
    ranges.noise_sigma = base.noise_sigma;
    ranges.n_beats = base.n_beats;
    for (int i = 0; i < f.corpus; ++i) {
      const std::uint64_t seed = base.seed + static_cast<std::uint64_t>(i);
      SynthParams p = sample_corpus_params(seed, ranges);
      p.artifacts = base.artifacts;
      if (f.spikes_per_beat) p = with_beat_spikes(p, seed);
      const std::string stem = (f.stem.empty() ? std::string("study") : f.stem) + "_" + std::to_string(seed);
      write_study(generate_synthetic(p), f.out_dir, stem, f.write_mask, out);
    }
    return 0;
  }
  if (f.spikes_per_beat) base = with_beat_spikes(base, base.seed);
  const std::string stem = f.stem.empty() ? "synth_" + std::to_string(base.seed) : f.stem;
  write_study(generate_synthetic(base), f.out_dir, stem, f.write_mask, out);
  return 0;
}

int cmd_agree(const std::string& measured, const std::string& reference, bool per_patient, const std::string& out_path,
              std::ostream& out, std::ostream& err) {
  MeasurementSet test = load_measurements(measured);
  MeasurementSet ref = load_measurements(reference);
  if (per_patient) {
    test = per_study_means(test);
    ref = per_study_means(ref);
  }
  std::vector<AgreementRow> rows;
  for (Field field : kAllFields) {
    AgreementRow row;
    row.field = field;
    try {
      row.stats = compare(ref, test, field);
      row.n = row.stats->n;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::stats) throw;
      if (std::string(e.what()).find("no overlapping") != std::string::npos) throw;
      err << "agree: " << to_string(field) << ": " << e.what() << "\n";
    }
    rows.push_back(row);
  }
  const std::string csv = format_agreement_csv(rows);
  if (out_path.empty()) {
    out << csv;
  } else {
    write_file_atomic(out_path, csv);
    out << out_path << "\n";
  }
  return 0;
}

int cmd_overlay(const std::string& image_path, const std::string& manifest, const std::string& out_path,
                const MeasureFlags& flags, std::ostream& out, std::ostream& err) {
  const MeasureOptions options = finish(flags);
  const Loaded l = load_study(image_path, manifest);
  if (!l.accepted) {
    err << image_path << ": rejected (label=" << l.manifest.label << ")\n";
    return 2;
  }
  const StudyAnalysis a = analyze_study(l.image, l.manifest, options);
  if (a.result.beats.empty()) err << image_path << ": warning: no measurable beats; drawing border only\n";
  save_image(render_overlay(l.image, l.manifest, a).image, out_path);
  out << out_path << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mitral inflow Doppler measurement from spectral Doppler still frames"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "Measure E, A, E/A and DT for each routed study image");
  std::vector<std::string> inputs;
  std::string manifest;
  std::string out_dir = ".";
  bool ecg_csv = false;
  MeasureFlags analyze_flags;
  analyze->add_option("inputs", inputs, "PPM images or directories of them")->required();
  analyze->add_option("--manifest", manifest, "Manifest path (default: <image-stem>.manifest beside the image)");
  analyze->add_option("--out", out_dir, "Output directory for per-study CSVs")->capture_default_str();
  analyze->add_flag("--ecg-csv", ecg_csv, "Also write <stem>.ecg.csv with the recovered ECG");
  add_measure_flags(analyze, analyze_flags);

  auto* synth = app.add_subcommand("synth", "Generate synthetic studies with ground truth");
  SynthFlags sf;
  synth->add_option("--e", sf.params.e_velocity, "E velocity (m/s)")->capture_default_str();
  synth->add_option("--a", sf.params.a_velocity, "A velocity (m/s), 0 for a fused beat")->capture_default_str();
  synth->add_option("--dt", sf.params.dt_ms, "Deceleration time (ms)")->capture_default_str();
  synth->add_option("--hr", sf.params.heart_rate, "Heart rate (bpm)")->capture_default_str();
  synth->add_option("--beats", sf.params.n_beats, "Complete beats")->capture_default_str();
  synth->add_option("--knee", sf.params.dt_second_slope_fraction, "Fraction of E descent after the slope change")
      ->capture_default_str();
  synth->add_option("--knee-ratio", sf.params.second_slope_ratio, "Second descent slope relative to the first")
      ->capture_default_str();
  synth->add_option("--noise", sf.params.noise_sigma, "Speckle noise sigma (0-1)")->capture_default_str();
  synth->add_option("--seed", sf.params.seed, "RNG seed (first seed in corpus mode)")->capture_default_str();
  synth->add_option("--label", sf.params.label, "Image class label")->capture_default_str();
  synth->add_option("--spike", sf.spikes, "Spike artifact 'time_ms,velocity,width_ms' (repeatable)");
  synth->add_option("--dropout", sf.dropouts, "Dropout artifact 'time_ms,width_ms' (repeatable)");
  synth->add_option("--alias", sf.aliases, "Alias band 'time_ms,width_ms,depth_mps' (repeatable)");
  synth->add_flag("--spikes-per-beat", sf.spikes_per_beat, "One 5 ms spike at 1.5 x E inside every beat");
  synth->add_option("--params", sf.params_file, "key = value parameter file");
  synth->add_option("--n", sf.corpus, "Corpus mode: N studies with seeds seed..seed+N-1 and sampled parameters")
      ->capture_default_str();
  synth->add_option("--stem", sf.stem, "Output file stem");
  synth->add_option("--out", sf.out_dir, "Output directory")->capture_default_str();
  synth->add_flag("--write-mask", sf.write_mask, "Also write the analytic mask as <stem>.mask.pgm");

  auto* agree = app.add_subcommand("agree", "Agreement statistics between measured and reference CSVs");
  std::string measured;
  std::string reference;
  bool per_patient = false;
  std::string agree_out;
  agree->add_option("measured", measured, "Measurement CSV file or directory")->required();
  agree->add_option("reference", reference, "Reference CSV file or directory")->required();
  agree->add_flag("--per-patient", per_patient, "Average beats per study before pairing");
  agree->add_option("--out", agree_out, "Write the report here instead of standard output");

  auto* overlay = app.add_subcommand("overlay", "Draw the envelope and measurement markers on a study image");
  std::string overlay_image;
  std::string overlay_manifest;
  std::string overlay_out;
  MeasureFlags overlay_flags;
  overlay->add_option("image", overlay_image, "PPM image")->required();
  overlay->add_option("--manifest", overlay_manifest, "Manifest path (default: <image-stem>.manifest)");
  overlay->add_option("--out", overlay_out, "Output PPM")->required();
  add_measure_flags(overlay, overlay_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*analyze) return cmd_analyze(inputs, manifest, out_dir, ecg_csv, analyze_flags, out, err);
    if (*synth) return cmd_synth(sf, out);
    if (*agree) return cmd_agree(measured, reference, per_patient, agree_out, out, err);
    if (*overlay) return cmd_overlay(overlay_image, overlay_manifest, overlay_out, overlay_flags, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace mitral
