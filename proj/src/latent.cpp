#include "cgflow/latent.hpp"

#include <algorithm>
#include <cmath>

#include "cgflow/rng.hpp"

namespace cgflow {

Latent::Latent(int f, int h, int w, int c, double fill)
    : frames(f), height(h), width(w), channels(c) {
  if (f <= 0 || h <= 0 || w <= 0 || c <= 0)
    throw ConfigError(cat("latent shape (", f, ",", h, ",", w, ",", c,
                          ") must be positive"));
  data.assign(static_cast<std::size_t>(f) * h * w * c, fill);
}

bool Latent::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

double Latent::norm() const {
  double s = 0.0;
  for (double v : data) s += v * v;
  return std::sqrt(s);
}

double Latent::max_abs() const {
  double m = 0.0;
  for (double v : data) m = std::max(m, std::fabs(v));
  return m;
}

std::string Latent::shape_str() const {
  return cat("(", frames, ",", height, ",", width, ",", channels, ")");
}

VideoMask::VideoMask(int f, int h, int w, std::uint8_t fill)
    : frames(f), height(h), width(w) {
  if (f <= 0 || h <= 0 || w <= 0)
    throw ConfigError(cat("mask shape (", f, ",", h, ",", w, ") must be positive"));
  if (fill > 1) throw ConfigError("mask entries must be 0 or 1");
  data.assign(static_cast<std::size_t>(f) * h * w, fill);
}

void require_same_shape(const Latent& a, const Latent& b, const char* what) {
  if (!a.same_shape(b))
    throw ConfigError(cat(what, ": shape mismatch ", a.shape_str(), " vs ",
                          b.shape_str()));
}

void require_finite(const Latent& z, const char* what) {
  if (!z.all_finite()) throw NumericError(cat(what, ": non-finite entries"));
}

Latent normal_latent(int f, int h, int w, int c, Rng& rng) {
  Latent out(f, h, w, c);
  for (double& v : out.data) v = rng.normal();
  return out;
}

Latent like(const Latent& ref, double fill) {
  return Latent(ref.frames, ref.height, ref.width, ref.channels, fill);
}

void TimeSchedule::validate() const {
  if (steps.size() < 2) throw ConfigError("schedule needs at least 2 steps");
  if (steps.front() != 1.0)
    throw ConfigError(cat("schedule must start at 1.0, got ", steps.front()));
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    if (!(steps[i] > steps[i + 1]))
      throw ConfigError(cat("schedule not strictly decreasing at index ", i));
  }
  if (steps.back() <= 0.0) throw ConfigError("schedule must stay positive");
  if (tau_index < 0 || tau_index >= static_cast<int>(steps.size()))
    throw ConfigError(cat("tau_index ", tau_index, " out of range"));
}

TimeSchedule make_schedule(int n_steps, double tau, double t_min) {
  if (n_steps < 2) throw ConfigError("schedule needs at least 2 steps");
  if (!(t_min > 0.0 && t_min < 1.0))
    throw ConfigError(cat("t_min ", t_min, " outside (0, 1)"));
  if (tau < t_min || tau > 1.0)
    throw ConfigError(cat("tau ", tau, " outside [t_min, 1]"));
  TimeSchedule s;
  s.steps.resize(n_steps);
  for (int i = 0; i < n_steps; ++i) {
    double f = static_cast<double>(i) / (n_steps - 1);
    s.steps[i] = 1.0 + f * (t_min - 1.0);
  }
  s.steps.front() = 1.0;
  s.steps.back() = t_min;
  int nearest = 0;
  for (int i = 1; i < n_steps; ++i)
    if (std::fabs(s.steps[i] - tau) < std::fabs(s.steps[nearest] - tau)) nearest = i;
  s.steps[nearest] = tau;
  s.tau_index = nearest;
  s.validate();
  return s;
}

}  // namespace cgflow
