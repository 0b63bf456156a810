#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace corrface {

// Single-channel raster with intensities in [0, 1], row-major, pixel centres on
// integer coordinates with the origin at the top-left.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  double& at(int x, int y) { return pixels_[index(x, y)]; }
  double at(int x, int y) const { return pixels_[index(x, y)]; }

  // Zero outside the raster.
  double value_or_zero(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0.0;
    return pixels_[index(x, y)];
  }

  // Bilinear interpolation; samples outside the raster contribute 0.
  double sample_bilinear(double x, double y) const;

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  static Image from_bytes(int width, int height,
                          std::span<const std::uint8_t> bytes);
  std::vector<std::uint8_t> to_bytes() const;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

// 8-bit grayscale PGM (P5 or P2) or PNG, chosen by file signature.
Image read_image(const std::filesystem::path& path);

void write_pgm(const Image& image, const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace corrface
