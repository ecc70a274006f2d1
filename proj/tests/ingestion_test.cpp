#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mitral/error.hpp"
#include "mitral/image.hpp"
#include "mitral/ingestion.hpp"
#include "mitral/synth.hpp"
#include "support.hpp"

using namespace mitral;

namespace {

const char* kManifest =
    "label = mitral_inflow\n"
    "velocity_scale = 0.005\n"
    "time_scale = 2.5\n"
    "baseline_row = 400\n"
    "spectral_region = 10, 20, 709, 519\n"
    "flow_above_baseline = true\n"
    "ecg_region = 10, 560, 709, 700\n";

std::string without_line(const std::string& text, const std::string& key) {
  std::string out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key, 0) != 0) out += line + "\n";
  }
  return out;
}

std::string replace_line(const std::string& text, const std::string& key, const std::string& replacement) {
  return without_line(text, key) + replacement + "\n";
}

}  // namespace

TEST(Ppm, DecodesAllBlackImage) {
  const std::string header = "P6\n3 2\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.resize(bytes.size() + 3 * 2 * 3, 0);
  const RasterImage img = decode_ppm(bytes);
  EXPECT_EQ(img.width(), 3);
  EXPECT_EQ(img.height(), 2);
  EXPECT_EQ(img, RasterImage(3, 2, Rgb{0, 0, 0}));
}

TEST(Ppm, AcceptsHeaderComments) {
  const std::string header = "P6\n# made by hand\n2 1\n# depth\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (std::uint8_t v : {1, 2, 3, 4, 5, 6}) bytes.push_back(v);
  const RasterImage img = decode_ppm(bytes);
  EXPECT_EQ(img.at(0, 0), (Rgb{1, 2, 3}));
  EXPECT_EQ(img.at(1, 0), (Rgb{4, 5, 6}));
}

TEST(Ppm, TruncatedFileNamesTheFile) {
  test::TempDir dir("ppm");
  const std::string header = "P6\n4 4\n255\n";
  std::string body(header);
  body.append(10, '\0');
  test::write_text(dir / "cut.ppm", body);
  try {
    load_image(dir / "cut.ppm");
    FAIL() << "expected a decode error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::format);
    EXPECT_NE(std::string(e.what()).find("cut.ppm"), std::string::npos);
  }
}

TEST(Ppm, RejectsSixteenBitDepth) {
  const std::string header = "P6\n1 1\n65535\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.resize(bytes.size() + 6, 0);
  EXPECT_THROW(decode_ppm(bytes), Error);
}

TEST(Ppm, RejectsCorruptHeader) {
  const std::string header = "P3\n1 1\n255\n0 0 0\n";
  EXPECT_THROW(decode_ppm(std::vector<std::uint8_t>(header.begin(), header.end())), Error);
}

TEST(Ppm, MissingFileIsIoError) {
  try {
    load_image("/nonexistent/dir/x.ppm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io);
  }
}

TEST(Ppm, SyntheticImageRoundTripsThroughDisk) {
  test::TempDir dir("ppm");
  SynthParams p;
  p.noise_sigma = 0.1;
  p.seed = 3;
  const SynthStudy study = generate_synthetic(p);
  save_image(study.image, dir / "s.ppm");
  EXPECT_EQ(load_image(dir / "s.ppm"), study.image);
}

TEST(Ppm, EncodeDecodeIsIdentityOnRandomImages) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    RasterImage img(1 + static_cast<int>(rng() % 40), 1 + static_cast<int>(rng() % 40));
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        img.at(x, y) = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                        static_cast<std::uint8_t>(rng())};
      }
    }
    const auto bytes = encode_ppm(img);
    EXPECT_EQ(decode_ppm(bytes), img);
    EXPECT_EQ(encode_ppm(decode_ppm(bytes)), bytes);
  }
}

TEST(Pgm, RoundTrip) {
  GrayImage g(5, 3);
  g.at(4, 2) = 255;
  g.at(0, 1) = 17;
  EXPECT_EQ(decode_pgm(encode_pgm(g)), g);
}

TEST(Manifest, ParsesFields) {
  const CalibrationManifest m = parse_manifest(kManifest);
  EXPECT_EQ(m.label, "mitral_inflow");
  EXPECT_DOUBLE_EQ(m.velocity_scale, 0.005);
  EXPECT_DOUBLE_EQ(m.time_scale, 2.5);
  EXPECT_EQ(m.baseline_row, 400);
  EXPECT_EQ(m.spectral_region, (Region{10, 20, 709, 519}));
  EXPECT_TRUE(m.flow_above_baseline);
  EXPECT_EQ(m.ecg_color, (Rgb{0, 255, 0}));
  EXPECT_EQ(m.ecg_color_tolerance, 60);
}

TEST(Manifest, MissingKeyIsNamed) {
  try {
    parse_manifest(without_line(kManifest, "baseline_row"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::manifest);
    EXPECT_NE(std::string(e.what()).find("baseline_row"), std::string::npos);
  }
}

TEST(Manifest, NegativeScaleRejected) {
  EXPECT_THROW(parse_manifest(replace_line(kManifest, "velocity_scale", "velocity_scale = -1")), Error);
}

TEST(Manifest, UnknownAndDuplicateKeysRejected) {
  EXPECT_THROW(parse_manifest(std::string(kManifest) + "gain = 3\n"), Error);
  EXPECT_THROW(parse_manifest(std::string(kManifest) + "time_scale = 2.5\n"), Error);
}

TEST(Manifest, RegionOutsideImageRejectedWhenSizeKnown) {
  test::TempDir dir("manifest");
  test::write_text(dir / "m.manifest", kManifest);
  EXPECT_NO_THROW(load_manifest(dir / "m.manifest", std::pair{800, 720}));
  EXPECT_THROW(load_manifest(dir / "m.manifest", std::pair{600, 720}), Error);
}

TEST(Manifest, FormatParseRoundTrip) {
  const CalibrationManifest m = synth_manifest(SynthParams{});
  EXPECT_EQ(parse_manifest(format_manifest(m)), m);
}

// Every single-invariant violation is rejected; the base manifest is accepted.
TEST(Manifest, ValidationMatchesInvariants) {
  const CalibrationManifest base = parse_manifest(kManifest);
  const std::pair<int, int> size{800, 720};
  EXPECT_NO_THROW(validate_manifest(base, size));
  std::vector<std::function<void(CalibrationManifest&)>> breakers{
      [](auto& m) { m.velocity_scale = 0.0; },
      [](auto& m) { m.time_scale = -2.0; },
      [](auto& m) { m.baseline_row = m.spectral_region.y1 + 1; },
      [](auto& m) { m.baseline_row = m.spectral_region.y0 - 1; },
      [](auto& m) { std::swap(m.spectral_region.x0, m.spectral_region.x1); },
      [](auto& m) { std::swap(m.ecg_region.y0, m.ecg_region.y1); },
      [](auto& m) { m.spectral_region.x1 = 800; },
      [](auto& m) { m.ecg_region.y1 = 720; },
      [](auto& m) { m.spectral_region.x0 = -1; },
      [](auto& m) { m.ecg_color_tolerance = -1; },
  };
  for (std::size_t i = 0; i < breakers.size(); ++i) {
    CalibrationManifest m = base;
    breakers[i](m);
    EXPECT_THROW(validate_manifest(m, size), Error) << "breaker " << i;
  }
}

TEST(Routing, AcceptsMitralInflow) {
  CalibrationManifest m = parse_manifest(kManifest);
  EXPECT_TRUE(route_image(m).accepted);
}

TEST(Routing, RejectsContinuousWave) {
  CalibrationManifest m = parse_manifest(kManifest);
  m.label = "mitral_inflow_CW";
  const RouteDecision d = route_image(m);
  EXPECT_FALSE(d.accepted);
  EXPECT_EQ(d.label, "mitral_inflow_CW");
}

TEST(Routing, UnknownLabelIsAnError) {
  CalibrationManifest m = parse_manifest(kManifest);
  m.label = "spectral_unknown";
  try {
    route_image(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_label);
  }
}

TEST(Routing, AcceptsExactlyOneKnownLabel) {
  CalibrationManifest m = parse_manifest(kManifest);
  int accepted = 0;
  for (const auto& label : known_labels()) {
    m.label = label;
    if (route_image(m).accepted) ++accepted;
  }
  EXPECT_EQ(accepted, 1);
}
