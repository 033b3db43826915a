#include "cgflow/flow.hpp"

#include "cgflow/oracle.hpp"

namespace cgflow {

Latent forward_noise(const Latent& x, TimePoint tau, const Latent& eps) {
  require_same_shape(x, eps, "forward_noise");
  require_finite(x, "forward_noise input");
  require_finite(eps, "forward_noise noise");
  Latent out = like(x);
  const double t = tau.value;
  for (std::size_t i = 0; i < x.size(); ++i)
    out.data[i] = (1.0 - t) * x.data[i] + t * eps.data[i];
  return out;
}

Latent euler_generate_step(const Latent& z, const Latent& v, TimePoint t,
                           TimePoint t_next) {
  require_same_shape(z, v, "euler_generate_step");
  if (!(t.value > t_next.value))
    throw ConfigError(cat("generate step needs t > t_next, got ", t.value,
                          " <= ", t_next.value));
  const double h = t.value - t_next.value;
  Latent out = like(z);
  for (std::size_t i = 0; i < z.size(); ++i)
    out.data[i] = z.data[i] + h * v.data[i];
  return out;
}

Latent euler_invert_step(const Latent& z, const Latent& v, TimePoint t,
                         TimePoint t_next) {
  require_same_shape(z, v, "euler_invert_step");
  if (!(t.value < t_next.value))
    throw ConfigError(cat("invert step needs t < t_next, got ", t.value,
                          " >= ", t_next.value));
  const double h = t_next.value - t.value;
  Latent out = like(z);
  for (std::size_t i = 0; i < z.size(); ++i)
    out.data[i] = z.data[i] - h * v.data[i];
  return out;
}

Latent mask_mix(const Latent& a, const Latent& b, const VideoMask& m) {
  require_same_shape(a, b, "mask_mix");
  if (!m.compatible_with(a))
    throw ConfigError(cat("mask_mix: mask (", m.frames, ",", m.height, ",",
                          m.width, ") incompatible with latent ", a.shape_str()));
  Latent out = like(a);
  const int c = a.channels;
  std::size_t px = 0;
  for (std::size_t p = 0; p < m.size(); ++p, px += c) {
    const Latent& src = m.data[p] ? a : b;
    for (int k = 0; k < c; ++k) out.data[px + k] = src.data[px + k];
  }
  return out;
}

Latent invert_to_tau(const Latent& z, const Condition& cond,
                     const TimeSchedule& schedule, const VelocityOracle& oracle) {
  schedule.validate();
  Latent cur = z;
  const int last = static_cast<int>(schedule.steps.size()) - 1;
  for (int i = last; i > schedule.tau_index; --i) {
    const TimePoint t(schedule.steps[i], schedule.steps.back());
    const TimePoint t_next(schedule.steps[i - 1], schedule.steps.back());
    const Latent v = oracle.velocity(cur, t, cond);
    cur = euler_invert_step(cur, v, t, t_next);
    if (!cur.all_finite())
      throw NumericError(cat("non-finite latent during inversion at t = ",
                             t_next.value));
  }
  return cur;
}

Latent generate_to_data(const Latent& z_tau, const Condition& cond,
                        const TimeSchedule& schedule, const VelocityOracle& oracle) {
  schedule.validate();
  Latent cur = z_tau;
  const int last = static_cast<int>(schedule.steps.size()) - 1;
  for (int i = schedule.tau_index; i < last; ++i) {
    const TimePoint t(schedule.steps[i], schedule.steps.back());
    const TimePoint t_next(schedule.steps[i + 1], schedule.steps.back());
    const Latent v = oracle.velocity(cur, t, cond);
    cur = euler_generate_step(cur, v, t, t_next);
    if (!cur.all_finite())
      throw NumericError(cat("non-finite latent during generation at t = ",
                             t_next.value));
  }
  return cur;
}

}  // namespace cgflow
