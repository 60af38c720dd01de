#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace camoforge {

// Row-major H x W x C image of doubles (channel innermost).
struct Image {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c = 3, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }

  bool operator==(const Image&) const = default;
};

// Average pooling by an integer factor; height and width must be divisible.
Image downsample(const Image& img, int factor);
// Adjoint of downsample: spreads each gradient value over its block / factor^2.
Image downsample_backward(const Image& grad, int factor);

// Binary PPM (P6, maxval 255). Values are clamped to [0,1] and rounded.
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);
// Binary PGM (P5) from a single-channel image.
void write_pgm(const std::filesystem::path& path, const Image& img);

std::vector<std::uint8_t> encode_ppm(const Image& img);

}  // namespace camoforge
