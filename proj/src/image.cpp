#include "camoforge/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "camoforge/common.hpp"
#include "camoforge/io.hpp"

namespace camoforge {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c),
      data(static_cast<std::size_t>(h) * w * c, fill) {
  if (h < 0 || w < 0 || c <= 0) throw std::invalid_argument("invalid image shape");
}

Image downsample(const Image& img, int factor) {
  if (factor < 1 || img.height % factor != 0 || img.width % factor != 0) {
    throw std::invalid_argument("downsample: size not divisible by factor");
  }
  if (factor == 1) return img;
  Image out(img.height / factor, img.width / factor, img.channels);
  const double scale = 1.0 / (factor * factor);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx) acc += img.at(y * factor + dy, x * factor + dx, c);
        out.at(y, x, c) = acc * scale;
      }
    }
  }
  return out;
}

Image downsample_backward(const Image& grad, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample_backward: bad factor");
  if (factor == 1) return grad;
  Image out(grad.height * factor, grad.width * factor, grad.channels);
  const double scale = 1.0 / (factor * factor);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < out.channels; ++c)
        out.at(y, x, c) = grad.at(y / factor, x / factor, c) * scale;
  return out;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  if (img.channels != 3) throw std::invalid_argument("PPM needs 3 channels");
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.size());
  for (double v : img.data) bytes.push_back(to_byte(v));
  return bytes;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  auto bytes = encode_ppm(img);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                             bytes.size()));
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1) throw std::invalid_argument("PGM needs 1 channel");
  std::string out =
      "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  for (double v : img.data) out.push_back(static_cast<char>(to_byte(v)));
  write_file_atomic(path, out);
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingPrerequisite("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw std::runtime_error("unsupported PPM: " + path.string());
  }
  in.get();
  Image img(h, w, 3);
  std::vector<unsigned char> raw(img.size());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw std::runtime_error("truncated PPM: " + path.string());
  for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
  return img;
}

}  // namespace camoforge
