#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cgflow/latent.hpp"
#include "cgflow/oracle.hpp"

namespace cgflow {

// The two pipeline passes share one SDE; they differ only in which mask region
// is re-imposed after every iteration (see run_phi_cf).
enum class Stage { one, two };

struct SdeConfig {
  TimePoint tau{0.8};
  double gamma = 0.2;
  int n_steps = 10;
  // Tilting strength; empty derives (1 - tau) / tau, which cancels the
  // unconditional-velocity term exactly.
  std::optional<double> beta;
  Stage stage = Stage::one;
  std::uint64_t seed = 0;

  double effective_beta() const;
  void validate() const;
};

// beta value at which the general update's v_eps coefficient vanishes.
double beta_for_tau(TimePoint tau);

// v_c = v_theta - v_eps, the condition-attributable part of the velocity.
Latent consistency_bias(const Latent& v_theta, const Latent& v_eps);

// One tilted-Langevin iteration at fixed time tau:
//   z' = (1 - gamma/tau) z + ((1 - tau)/tau) gamma v_theta + sqrt(2 gamma) noise.
// gamma <= 0 is an error; gamma >= tau runs but contracts nothing, which the
// norm-trace diagnostics flag as divergence.
Latent cf_sde_step(const Latent& z, const Latent& v_theta, TimePoint tau,
                   double gamma, const Latent& noise);

// General-beta form:
//   z' = (1 - gamma/tau) z + beta gamma v_theta
//        - (beta - (1 - tau)/tau) gamma v_eps + sqrt(2 gamma) noise.
// At beta = beta_for_tau(tau) the v_eps coefficient is exactly zero and this
// reduces to cf_sde_step.
Latent general_sde_step(const Latent& z, const Latent& v_theta,
                        const Latent& v_eps, TimePoint tau, double gamma,
                        double beta, const Latent& noise);

// Score of the time-tau marginal recovered from the unconditional velocity:
//   score = -(z - (1 - tau)(z + tau v_eps)) / tau^2.
Latent score_from_v_eps(const Latent& z, const Latent& v_eps, TimePoint tau);

// Overdamped Langevin targeting p*(z) proportional to
// N(z; (1-tau) mu, tau^2 I) * exp(beta C(z)), discretized with Euler-Maruyama:
//   z' = z + gamma (beta grad_c(z) + score_q(z)) + sqrt(2 gamma) noise.
// Requires gamma < tau^2 * min(1, 1/beta); keeps every `thin`-th state after
// burn-in; aborts if |z| exceeds 1e6.
std::vector<Latent> langevin_tilt_sample(
    const Latent& mu, TimePoint tau,
    const std::function<Latent(const Latent&)>& grad_c, double beta,
    double gamma, int burn_in, int n_samples, int thin, std::uint64_t seed);

struct SdeTraceEntry {
  int iteration = 0;
  double norm = 0.0;
  // Consistency proxy -|z - x_hat|^2 with x_hat = z + tau v_theta; reported
  // for monitoring only, never optimized against.
  double proxy = 0.0;
};

struct SdeTrace {
  std::vector<SdeTraceEntry> entries;
};

struct NormTraceReport {
  double initial_norm = 0.0;
  double max_rel_deviation = 0.0;  // max |norm_n - norm_0| / norm_0
  bool diverged = false;
};

NormTraceReport latent_norm_trace(const SdeTrace& trace);

// Text table (iteration, norm, proxy) followed by a key=value report block.
void write_trace(const std::string& path, const SdeTrace& trace);

// Fixed-tau chain of cf_sde_step iterations for stability diagnostics; entry 0
// is the initial state. cond == nullptr uses the unconditional velocity.
SdeTrace run_sde_chain(const Latent& z0, const VelocityOracle& oracle,
                       const Condition* cond, TimePoint tau, double gamma,
                       int n_iters, std::uint64_t seed);

struct PhiCfResult {
  Latent video;        // decoded output (identity codec)
  SdeTrace trace;      // per-iteration norm and consistency proxy
  Latent z_inv;        // inversion endpoint at tau
  Latent z_tau_init;   // state after mask composition, before SDE iterations
  Latent z_tau_star;   // state after the final SDE iteration
};

// Full consistency-guided pass: invert the input to tau, compose with a
// forward-noised base (the input itself in stage one, the background latent in
// stage two) under the mask, run n_steps SDE iterations re-imposing the mask
// after each (stage one keeps the masked region, stage two updates it), then
// integrate back to the data end of the schedule.
PhiCfResult run_phi_cf(const Latent& input_video, const Condition& cond,
                       const std::optional<Latent>& background,
                       const VideoMask& mask, const VelocityOracle& oracle,
                       const TimeSchedule& schedule, const SdeConfig& cfg);

}  // namespace cgflow
