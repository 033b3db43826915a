#pragma once

#include "cgflow/latent.hpp"

namespace cgflow {

class VelocityOracle;
struct Condition;

// Straight-line noising path z_t = (1-t)*x + t*eps. The velocity convention
// throughout is v = x - eps, so the denoised estimate is x_hat = z + t*v and
// sampling integrates from t = 1 down to the time floor.

Latent forward_noise(const Latent& x, TimePoint tau, const Latent& eps);

// One Euler step toward data; requires t > t_next.
Latent euler_generate_step(const Latent& z, const Latent& v, TimePoint t,
                           TimePoint t_next);

// One naive inversion step toward noise (re-evaluated velocity); t < t_next.
Latent euler_invert_step(const Latent& z, const Latent& v, TimePoint t,
                         TimePoint t_next);

// Per-pixel select: mask 1 takes `a`, mask 0 takes `b`, broadcast over
// channels. Entries are copied exactly, never blended.
Latent mask_mix(const Latent& a, const Latent& b, const VideoMask& m);

// Chains euler_invert_step from the data end of the schedule up to
// schedule.steps[schedule.tau_index]. tau_index at the data end is a no-op.
Latent invert_to_tau(const Latent& z, const Condition& cond,
                     const TimeSchedule& schedule, const VelocityOracle& oracle);

// Chains euler_generate_step from schedule.steps[schedule.tau_index] down to
// the data end.
Latent generate_to_data(const Latent& z_tau, const Condition& cond,
                        const TimeSchedule& schedule, const VelocityOracle& oracle);

}  // namespace cgflow
