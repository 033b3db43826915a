#include "cgflow/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace cgflow {

Image::Image(int h, int w, double fill) : height(h), width(w) {
  if (h <= 0 || w <= 0)
    throw ConfigError(cat("image shape (", h, ",", w, ") must be positive"));
  rgb.assign(static_cast<std::size_t>(h) * w * 3, fill);
}

MaskImage::MaskImage(int h, int w, std::uint8_t fill) : height(h), width(w) {
  if (h <= 0 || w <= 0)
    throw ConfigError(cat("mask shape (", h, ",", w, ") must be positive"));
  if (fill > 1) throw ConfigError("mask entries must be 0 or 1");
  data.assign(static_cast<std::size_t>(h) * w, fill);
}

std::size_t MaskImage::count() const {
  std::size_t n = 0;
  for (auto v : data) n += v;
  return n;
}

DepthMap::DepthMap(int h, int w, double fill) : height(h), width(w) {
  if (h <= 0 || w <= 0)
    throw ConfigError(cat("depth shape (", h, ",", w, ") must be positive"));
  data.assign(static_cast<std::size_t>(h) * w, fill);
}

IdImage::IdImage(int h, int w, std::int32_t fill) : height(h), width(w) {
  if (h <= 0 || w <= 0)
    throw ConfigError(cat("id image shape (", h, ",", w, ") must be positive"));
  data.assign(static_cast<std::size_t>(h) * w, fill);
}

void save_ppm(const std::string& path, const Image& img) {
  if (img.rgb.empty()) throw ConfigError("refusing to save empty image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(cat("cannot write ", path));
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::string payload;
  payload.reserve(img.rgb.size());
  for (double v : img.rgb) {
    const double c = std::clamp(v, 0.0, 1.0);
    payload.push_back(static_cast<char>(
        static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw ConfigError(cat("short write to ", path));
}

Image load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(cat("cannot open ", path));
  std::string magic;
  in >> magic;
  if (magic != "P6") throw ConfigError(cat(path, ": expected P6, got ", magic));
  auto next_token = [&]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw ConfigError(cat(path, ": truncated header"));
  };
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (maxval != 255) throw ConfigError(cat(path, ": maxval must be 255"));
  in.get();  // single whitespace after maxval
  Image img(h, w);
  std::vector<char> payload(static_cast<std::size_t>(h) * w * 3);
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (in.gcount() != static_cast<std::streamsize>(payload.size()))
    throw ConfigError(cat(path, ": truncated payload"));
  for (std::size_t i = 0; i < payload.size(); ++i)
    img.rgb[i] = static_cast<unsigned char>(payload[i]) / 255.0;
  return img;
}

}  // namespace cgflow
