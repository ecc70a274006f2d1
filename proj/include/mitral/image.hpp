#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mitral {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major 8-bit RGB pixel grid.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, Rgb fill = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }
  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const Rgb& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<Rgb>& pixels() const noexcept { return pixels_; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

/// Row-major 8-bit single-channel grid (masks).
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Binary PPM (P6) / PGM (P5), maxval 255 only.
RasterImage load_image(const std::filesystem::path& path);
void save_image(const RasterImage& image, const std::filesystem::path& path);
GrayImage load_gray(const std::filesystem::path& path);
void save_gray(const GrayImage& image, const std::filesystem::path& path);

RasterImage decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>");
std::vector<std::uint8_t> encode_ppm(const RasterImage& image);
GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>");
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace mitral
