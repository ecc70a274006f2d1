#include "mitral/image.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "mitral/error.hpp"

namespace mitral {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::manifest: return "manifest";
    case ErrorCode::unknown_label: return "unknown_label";
    case ErrorCode::region: return "region";
    case ErrorCode::empty_segmentation: return "empty_segmentation";
    case ErrorCode::mask_dimensions: return "mask_dimensions";
    case ErrorCode::empty_ecg: return "empty_ecg";
    case ErrorCode::labeling: return "labeling";
    case ErrorCode::synth_conflict: return "synth_conflict";
    case ErrorCode::invalid_params: return "invalid_params";
    case ErrorCode::stats: return "stats";
    case ErrorCode::aggregate: return "aggregate";
    case ErrorCode::rejected: return "rejected";
  }
  return "unknown";
}

RasterImage::RasterImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw Error(ErrorCode::format, "image dimensions must be positive");
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw Error(ErrorCode::format, "image dimensions must be positive");
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

namespace {

struct NetpbmHeader {
  int width = 0;
  int height = 0;
  std::size_t data_offset = 0;
};

// Parses "Px <w> <h> <maxval>" with optional '#' comments, followed by a single whitespace byte.
NetpbmHeader parse_header(const std::vector<std::uint8_t>& bytes, char kind, const std::string& name) {
  auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorCode::format, name + ": " + why);
  };
  if (bytes.size() < 2 || bytes[0] != 'P') throw fail("corrupt header (missing magic)");
  if (bytes[1] != static_cast<std::uint8_t>(kind)) {
    throw fail(std::string("unsupported format P") + static_cast<char>(bytes[1]) + ", expected P" + kind);
  }
  std::size_t pos = 2;
  long values[3] = {0, 0, 0};
  for (long& value : values) {
    for (;;) {
      if (pos >= bytes.size()) throw fail("corrupt header (truncated)");
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (!std::isdigit(bytes[pos])) throw fail("corrupt header (expected integer)");
    value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000) throw fail("corrupt header (value out of range)");
      ++pos;
    }
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("corrupt header (missing separator)");
  ++pos;
  if (values[0] < 1 || values[1] < 1) throw fail("corrupt header (zero dimension)");
  if (values[2] != 255) throw fail("unsupported bit depth (maxval " + std::to_string(values[2]) + ", need 255)");
  return {static_cast<int>(values[0]), static_cast<int>(values[1]), pos};
}

std::string header_text(char kind, int width, int height) {
  return std::string("P") + kind + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
}

}  // namespace

RasterImage decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  const auto header = parse_header(bytes, '6', name);
  const std::size_t count = static_cast<std::size_t>(header.width) * header.height;
  if (bytes.size() - header.data_offset < count * 3) {
    throw Error(ErrorCode::format, name + ": truncated pixel data");
  }
  RasterImage image(header.width, header.height);
  const std::uint8_t* p = bytes.data() + header.data_offset;
  for (int y = 0; y < header.height; ++y) {
    for (int x = 0; x < header.width; ++x, p += 3) image.at(x, y) = {p[0], p[1], p[2]};
  }
  return image;
}

std::vector<std::uint8_t> encode_ppm(const RasterImage& image) {
  const std::string head = header_text('6', image.width(), image.height());
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.reserve(out.size() + image.pixels().size() * 3);
  for (const Rgb& px : image.pixels()) {
    out.push_back(px.r);
    out.push_back(px.g);
    out.push_back(px.b);
  }
  return out;
}

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  const auto header = parse_header(bytes, '5', name);
  const std::size_t count = static_cast<std::size_t>(header.width) * header.height;
  if (bytes.size() - header.data_offset < count) throw Error(ErrorCode::format, name + ": truncated pixel data");
  GrayImage image(header.width, header.height);
  const std::uint8_t* p = bytes.data() + header.data_offset;
  for (int y = 0; y < header.height; ++y) {
    for (int x = 0; x < header.width; ++x) image.at(x, y) = *p++;
  }
  return image;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
  const std::string head = header_text('5', image.width(), image.height());
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), image.pixels().begin(), image.pixels().end());
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, path.string() + ": cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::io, path.string() + ": read failed");
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io, path.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::io, path.string() + ": rename failed");
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

RasterImage load_image(const std::filesystem::path& path) { return decode_ppm(read_file(path), path.string()); }

void save_image(const RasterImage& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_ppm(image));
}

GrayImage load_gray(const std::filesystem::path& path) { return decode_pgm(read_file(path), path.string()); }

void save_gray(const GrayImage& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(image));
}

}  // namespace mitral
