#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cgflow/common.hpp"

namespace cgflow {

// RGB image, values in [0, 1], row-major, channels innermost.
struct Image {
  int height = 0, width = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(int h, int w, double fill = 0.0);
  double& at(int y, int x, int c) {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  double at(int y, int x, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width;
  }
};

struct MaskImage {
  int height = 0, width = 0;
  std::vector<std::uint8_t> data;

  MaskImage() = default;
  MaskImage(int h, int w, std::uint8_t fill = 0);
  std::uint8_t& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t count() const;
};

// Per-pixel depth along the camera z axis; +inf marks uncovered pixels.
struct DepthMap {
  int height = 0, width = 0;
  std::vector<double> data;

  DepthMap() = default;
  DepthMap(int h, int w,
           double fill = std::numeric_limits<double>::infinity());
  double& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  double at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

// Per-pixel object id; -1 marks pixels with no geometry.
struct IdImage {
  int height = 0, width = 0;
  std::vector<std::int32_t> data;

  IdImage() = default;
  IdImage(int h, int w, std::int32_t fill = -1);
  std::int32_t& at(int y, int x) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::int32_t at(int y, int x) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

// Binary PPM (P6, maxval 255). Writing clamps to [0, 1] and rounds.
void save_ppm(const std::string& path, const Image& img);
Image load_ppm(const std::string& path);

}  // namespace cgflow
