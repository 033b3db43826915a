#pragma once

#include <cstdint>
#include <vector>

#include "cgflow/common.hpp"

namespace cgflow {

class Rng;

// Flow-matching time. t = 1 is pure noise, t -> 0 is data; a positive floor
// keeps 1/t and 1/t^2 terms bounded.
inline constexpr double kTimeFloor = 1e-3;

struct TimePoint {
  double value = kTimeFloor;

  TimePoint() = default;
  explicit TimePoint(double v, double floor = kTimeFloor) : value(v) {
    if (!is_finite(v) || v < floor || v > 1.0)
      throw ConfigError(cat("time point ", v, " outside [", floor, ", 1]"));
  }
};

// Dense video latent, shape (frames, height, width, channels), row-major with
// channels innermost. Doubles internally; files store float32.
struct Latent {
  int frames = 0, height = 0, width = 0, channels = 0;
  std::vector<double> data;

  Latent() = default;
  Latent(int f, int h, int w, int c, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  bool same_shape(const Latent& o) const {
    return frames == o.frames && height == o.height && width == o.width &&
           channels == o.channels;
  }
  double& at(int f, int h, int w, int c) {
    return data[((static_cast<std::size_t>(f) * height + h) * width + w) * channels + c];
  }
  double at(int f, int h, int w, int c) const {
    return data[((static_cast<std::size_t>(f) * height + h) * width + w) * channels + c];
  }

  bool all_finite() const;
  double norm() const;       // Euclidean norm over all entries
  double max_abs() const;

  std::string shape_str() const;
};

// Binary per-pixel mask broadcast over channels, shape (frames, height, width).
struct VideoMask {
  int frames = 0, height = 0, width = 0;
  std::vector<std::uint8_t> data;  // entries in {0, 1}

  VideoMask() = default;
  VideoMask(int f, int h, int w, std::uint8_t fill = 0);

  std::size_t size() const { return data.size(); }
  std::uint8_t& at(int f, int h, int w) {
    return data[(static_cast<std::size_t>(f) * height + h) * width + w];
  }
  std::uint8_t at(int f, int h, int w) const {
    return data[(static_cast<std::size_t>(f) * height + h) * width + w];
  }
  bool compatible_with(const Latent& z) const {
    return frames == z.frames && height == z.height && width == z.width;
  }
};

void require_same_shape(const Latent& a, const Latent& b, const char* what);
void require_finite(const Latent& z, const char* what);

Latent normal_latent(int f, int h, int w, int c, Rng& rng);
Latent like(const Latent& ref, double fill = 0.0);

// Strictly decreasing time grid from 1.0 down to t_min; tau_index marks the
// switch point between inversion and generation.
struct TimeSchedule {
  std::vector<double> steps;
  int tau_index = 0;

  void validate() const;
  double tau() const { return steps.at(tau_index); }
};

// Uniform grid of n_steps points on [t_min, 1]; the grid point nearest to tau
// is replaced by tau exactly so that SDE iterations run at the configured time.
TimeSchedule make_schedule(int n_steps, double tau, double t_min = kTimeFloor);

}  // namespace cgflow
